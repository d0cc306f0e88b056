"""Full-rank lattices: enumeration, quantisation and radii."""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BudgetExceeded, DomainError
from .geometry import MEMBER_TOL, ball_volume

INT_TOL = 1e-7
DEFAULT_CAP = 2_000_000


class Lattice:
    """Lattice spanned by the columns of `basis`.

    Attributes are fixed at construction: det, gram_factor (upper
    triangular R with R^T R = B^T B) and the condition number of B.
    `covering_radius` is filled in only when it is known exactly.
    """

    def __init__(self, basis, covering_radius=None, name=""):
        B = np.array(basis, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise DomainError(f"basis must be square, got shape {B.shape}")
        n = B.shape[0]
        Q, R = np.linalg.qr(B)
        s = np.sign(np.diag(R))
        s[s == 0] = 1.0
        R = R * s[:, None]
        det = float(abs(np.prod(np.diag(R))))
        # a vanishing pivot relative to the longest column means dependence
        scale_ = float(np.max(np.linalg.norm(B, axis=0))) if n else 1.0
        if not float(np.min(np.abs(np.diag(R)), initial=np.inf)) > 1e-12 * scale_ or not math.isfinite(det):
            raise DomainError("basis is singular")
        B.setflags(write=False)
        R.setflags(write=False)
        self.basis = B
        self.n = n
        self.det = det
        self.gram_factor = R
        self.cond = float(np.linalg.cond(B))
        self.covering_radius = covering_radius
        self.name = name
        self._inv = np.linalg.inv(B)

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"<Lattice{tag} n={self.n} det={self.det:.6g}>"

    def coords(self, x):
        """Real coefficients of x in the basis."""
        return np.asarray(x, dtype=np.float64) @ self._inv.T

    def point(self, a):
        return np.asarray(a, dtype=np.float64) @ self.basis.T


@dataclass(frozen=True)
class RadiiReport:
    r_pack: float
    r_eff: float
    r_cov_lower: float
    r_cov_upper: float
    method: dict


# --------------------------------------------------------------------------
# named lattices

def cubic(n, a=1.0):
    return Lattice(a * np.eye(n), covering_radius=abs(a) * math.sqrt(n) / 2, name=f"{a:g}Z^{n}")


def hexagonal(a=1.0):
    B = a * np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])
    return Lattice(B, covering_radius=abs(a) / math.sqrt(3), name="hex")


def d4():
    rows = np.array([[2, 0, 0, 0], [-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]], dtype=float)
    return Lattice(rows.T, covering_radius=1.0, name="D4")


def e8():
    rows = np.zeros((8, 8))
    rows[0, 0] = 2
    for i in range(1, 7):
        rows[i, i - 1] = -1
        rows[i, i] = 1
    rows[7, :] = 0.5
    return Lattice(rows.T, covering_radius=1.0, name="E8")


# --------------------------------------------------------------------------
# enumeration

def _gs_half_diagonal(lat):
    return 0.5 * float(np.sqrt(np.sum(np.diag(lat.gram_factor) ** 2)))


def _abs_eps(lat):
    return 1e-14 * float(np.mean(np.diag(lat.gram_factor) ** 2))


def enumerate_coeffs(lat, center, r, cap=DEFAULT_CAP):
    """Integer coefficient vectors of lattice points within r of center,
    in lexicographic order."""
    if r < 0:
        raise DomainError("radius must be nonnegative")
    center = np.asarray(center, dtype=np.float64)
    # the per-level interval widths bound the output as well; keep the smaller
    box = float(np.prod(2 * r / np.diag(lat.gram_factor) + 1))
    est = min(ball_volume(lat.n, r + _gs_half_diagonal(lat)) / lat.det, box)
    if est > cap:
        raise BudgetExceeded(f"ball would hold about {est:.3g} points (cap {cap})")
    t = lat.coords(center)
    r2 = r * r * (1 + MEMBER_TOL) + _abs_eps(lat)
    A, overflow = kernels.enum_box(lat.gram_factor, t, r2, cap)
    if overflow:
        raise BudgetExceeded(f"more than {cap} lattice points in the ball")
    if len(A) > 1:
        A = A[np.lexsort(A.T[::-1])]
    return A


def enumerate_in_ball(lat, center, r, cap=DEFAULT_CAP):
    """Lattice points v with ||v - center|| <= r, lexicographic by coefficients."""
    return lat.point(enumerate_coeffs(lat, center, r, cap))


def count_in_ball(lat, center, r, cap=DEFAULT_CAP):
    return len(enumerate_coeffs(lat, center, r, cap))


# --------------------------------------------------------------------------
# quantisation

def babai(lat, x):
    """Nearest-plane rounding; coefficient vector."""
    R = lat.gram_factor
    t = lat.coords(x)
    n = lat.n
    a = np.zeros(n, dtype=np.int64)
    for k in range(n - 1, -1, -1):
        s = R[k, k + 1:] @ (a[k + 1:] - t[k + 1:])
        a[k] = int(np.round(t[k] - s / R[k, k]))
    return a


def quantize_coeffs(lat, x):
    x = np.asarray(x, dtype=np.float64)
    a0 = babai(lat, x)
    d0 = float(np.linalg.norm(x - lat.point(a0)))
    A = enumerate_coeffs(lat, x, d0)
    if len(A) == 0:
        return a0
    d2 = np.sum((lat.point(A) - x) ** 2, axis=1)
    tied = np.flatnonzero(d2 <= d2.min() * (1 + MEMBER_TOL) + _abs_eps(lat))
    return A[tied[0]]          # A is lexicographically sorted


def quantize(lat, x):
    """Closest lattice point; ties go to the lexicographically smallest
    coefficient vector."""
    return lat.point(quantize_coeffs(lat, x))


def mod_lattice(lat, x):
    x = np.asarray(x, dtype=np.float64)
    return x - quantize(lat, x)


# --------------------------------------------------------------------------
# radii

def shortest_vector(lat):
    # Minkowski: the shortest vector is no longer than 2 r_eff
    r0 = min(float(np.min(np.linalg.norm(lat.basis, axis=0))), 2 * effective_radius(lat) * (1 + 1e-9))
    A = enumerate_coeffs(lat, np.zeros(lat.n), r0)
    A = A[np.any(A != 0, axis=1)]
    V = lat.point(A)
    norms = np.linalg.norm(V, axis=1)
    i = int(np.argmin(norms))
    return V[i], float(norms[i])


def packing_radius(lat):
    return 0.5 * shortest_vector(lat)[1]


def effective_radius(lat):
    return (lat.det / ball_volume(lat.n, 1.0)) ** (1.0 / lat.n)


def covering_radius_bounds(lat, samples=1000, rng=None):
    """Bracket on the covering radius.

    Lower: largest ||x mod lattice|| over uniform points of the fundamental
    parallelepiped. Upper: the exact value when known, otherwise half the
    Gram-Schmidt diagonal, which bounds the nearest-plane error.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    lower = 0.0
    if samples > 0:
        U = rng.random((samples, lat.n))
        X = U @ lat.basis.T
        lower = max(float(np.linalg.norm(mod_lattice(lat, x))) for x in X)
    if lat.covering_radius is not None:
        upper, how = float(lat.covering_radius), "exact"
    else:
        upper, how = _gs_half_diagonal(lat), "gram-schmidt-diagonal"
    return RadiiReport(packing_radius(lat), effective_radius(lat), lower, upper,
                       {"r_pack": "shortest-vector", "r_eff": "volume",
                        "r_cov_lower": f"monte-carlo:{samples}", "r_cov_upper": how})


def covering_radius_upper(lat):
    if lat.covering_radius is not None:
        return float(lat.covering_radius)
    return _gs_half_diagonal(lat)


# --------------------------------------------------------------------------
# membership and nesting

def contains(lat, x):
    a = lat.coords(x)
    dev = float(np.max(np.abs(a - np.round(a)))) if a.size else 0.0
    if 1e-9 < dev <= INT_TOL:
        warnings.warn(f"membership accepted with coefficient deviation {dev:.2e}; "
                      f"basis condition number {lat.cond:.3g}", RuntimeWarning, stacklevel=2)
    return dev <= INT_TOL


def scale(lat, c):
    if c == 0:
        raise DomainError("scale factor must be nonzero")
    rc = None if lat.covering_radius is None else abs(c) * lat.covering_radius
    return Lattice(c * lat.basis, covering_radius=rc, name=f"{c:g}*{lat.name}" if lat.name else "")


def sublattice_check(coarse, fine):
    """True when every coarse basis vector lies in the fine lattice."""
    return all(contains(fine, coarse.basis[:, j]) for j in range(coarse.n))
