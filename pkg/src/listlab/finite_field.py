"""Linear codes over a prime field F_q."""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, DomainError


def is_prime(q):
    q = int(q)
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    for d in range(3, math.isqrt(q) + 1, 2):
        if q % d == 0:
            return False
    return True


def next_prime(x):
    q = max(2, int(math.ceil(x)))
    while not is_prime(q):
        q += 1
    return q


def rref_mod(A, q):
    """Reduced row echelon form of A over F_q; returns (R, pivot columns)."""
    R = np.array(A, dtype=np.int64) % q
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(R[r:, c])
        if len(nz) == 0:
            continue
        p = r + nz[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r] = (R[r] * pow(int(R[r, c]), -1, q)) % q
        for i in range(rows):
            if i != r and R[i, c]:
                R[i] = (R[i] - R[i, c] * R[r]) % q
        pivots.append(c)
        r += 1
    return R, pivots


def rank_mod(A, q):
    A = np.asarray(A)
    if A.size == 0:
        return 0
    return len(rref_mod(A, q)[1])


@dataclass(frozen=True)
class LinearCodeFq:
    q: int
    n: int
    kappa: int
    G: np.ndarray           # n x kappa, entries in 0..q-1
    rank: int = -1
    attempts: int = 1

    def __post_init__(self):
        if not is_prime(self.q):
            raise DomainError(f"q={self.q} is not prime")
        if not 0 <= self.kappa <= self.n:
            raise DomainError(f"need 0 <= kappa <= n, got kappa={self.kappa}, n={self.n}")
        G = np.asarray(self.G, dtype=np.int64).reshape(self.n, self.kappa) % self.q
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        if self.rank < 0:
            object.__setattr__(self, "rank", rank_mod(G, self.q))

    @property
    def size(self):
        return self.q ** self.rank


def random_code(q, n, kappa, rng, require_full_rank=True, max_attempts=1000):
    if kappa > n:
        raise DomainError(f"kappa={kappa} exceeds n={n}")
    if not is_prime(q):
        raise DomainError(f"q={q} is not prime")
    for attempt in range(1, max_attempts + 1):
        G = rng.integers(0, q, size=(n, kappa))
        rk = rank_mod(G, q)
        if rk == kappa or not require_full_rank:
            return LinearCodeFq(q, n, kappa, G, rk, attempt)
    raise BudgetExceeded(f"no full-rank {n}x{kappa} matrix over F_{q} in {max_attempts} draws")


def encode(code, m):
    m = np.asarray(m, dtype=np.int64).reshape(-1)
    if m.shape[0] != code.kappa:
        raise DomainError(f"message needs {code.kappa} symbols, got {m.shape[0]}")
    if np.any((m < 0) | (m >= code.q)):
        raise DomainError("message symbols must lie in 0..q-1")
    return (code.G @ m) % code.q


def all_messages(q, kappa):
    if kappa == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(q), repeat=kappa)), dtype=np.int64).reshape(-1, kappa)


def enumerate_codewords(code):
    """Distinct codewords, as a sorted array of shape (q^rank, n)."""
    msgs = all_messages(code.q, code.kappa)
    words = (msgs @ code.G.T) % code.q
    return np.unique(words.reshape(len(msgs), code.n), axis=0)


def rank(code):
    return code.rank


def in_code(code, v):
    """Membership of an integer vector (mod q) in the code."""
    v = np.asarray(v, dtype=np.int64) % code.q
    if code.kappa == 0:
        return not v.any()
    return rank_mod(np.column_stack([code.G, v]), code.q) == code.rank
