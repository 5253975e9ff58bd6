"""Heat-kernel vectorization of persistence diagrams.

Diagrams are mapped onto the unit triangle ``T = {0 <= x <= y <= 1}``
(x = birth, y = death). The Neumann eigenfunctions of the Laplacian on ``T``
are symmetrized cosine products

    psi_mn(x, y) = c_mn * (cos(m pi x) cos(n pi y) + cos(n pi x) cos(m pi y)),

0 <= m <= n, with eigenvalue pi^2 (m^2 + n^2). A diagram is represented by its
Fourier coefficients f_k = sum_i psi_k(birth_i, death_i), which do not depend
on the bandwidth; the bandwidth only enters through the weights
exp(-lambda_k sigma).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ph import PersistenceDiagram

DEFAULT_ORDER = 10
DEFAULT_SIGMA = 10.0
DOMAIN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TriangleBasis:
    order: int
    modes: np.ndarray
    eigenvalues: np.ndarray
    norm_constants: np.ndarray

    def __len__(self):
        return len(self.modes)

    def evaluate(self, x, y) -> np.ndarray:
        """Basis functions at points ``(x, y)``; trailing axis indexes modes."""
        x = np.asarray(x, dtype=float)[..., None]
        y = np.asarray(y, dtype=float)[..., None]
        m = self.modes[:, 0] * np.pi
        n = self.modes[:, 1] * np.pi
        vals = np.cos(m * x) * np.cos(n * y) + np.cos(n * x) * np.cos(m * y)
        return self.norm_constants * vals

    def weights(self, sigma: float) -> np.ndarray:
        """Heat-kernel weights exp(-lambda_k sigma)."""
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        return np.exp(-self.eigenvalues * sigma)

    def index(self, m: int, n: int) -> int:
        m, n = min(m, n), max(m, n)
        hit = np.flatnonzero((self.modes[:, 0] == m) & (self.modes[:, 1] == n))
        if len(hit) == 0:
            raise KeyError(f"mode ({m}, {n}) not in basis of order {self.order}")
        return int(hit[0])


@lru_cache(maxsize=32)
def build_basis(order: int = DEFAULT_ORDER) -> TriangleBasis:
    """Eigenbasis with all modes 0 <= m <= n <= order, sorted by eigenvalue."""
    if order < 0:
        raise ValueError("basis order must be nonnegative")
    modes = np.array([(m, n) for n in range(order + 1) for m in range(n + 1)], dtype=np.int64)
    lam = np.pi ** 2 * (modes[:, 0] ** 2 + modes[:, 1] ** 2)
    # exact integer key keeps ties stable, then (m, n) lexicographic
    perm = np.lexsort((modes[:, 1], modes[:, 0], modes[:, 0] ** 2 + modes[:, 1] ** 2))
    modes = modes[perm]
    lam = lam[perm]
    c = np.full(len(modes), 2.0)
    c[(modes[:, 0] == 0) | (modes[:, 0] == modes[:, 1])] = np.sqrt(2.0)
    c[(modes[:, 0] == 0) & (modes[:, 1] == 0)] = 1.0 / np.sqrt(2.0)
    for arr in (modes, lam, c):
        arr.setflags(write=False)
    return TriangleBasis(order, modes, lam, c)


@dataclass(eq=False)
class HKVector:
    basis: TriangleBasis
    coeffs: np.ndarray
    source_size: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} coefficients, got {self.coeffs.shape}")

    def to_dict(self) -> dict:
        return {"order": self.basis.order, "coeffs": self.coeffs.tolist(), "source_size": int(self.source_size)}

    @classmethod
    def from_dict(cls, data: dict) -> "HKVector":
        return cls(build_basis(int(data["order"])), np.asarray(data["coeffs"], dtype=float),
                   int(data["source_size"]))


@dataclass(frozen=True)
class Standardizer:
    """Affine map of [lo, hi] onto [0, 1] shared by a comparison set."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"standardizer needs hi > lo, got lo={self.lo}, hi={self.hi}")

    def transform(self, diagram: PersistenceDiagram) -> PersistenceDiagram:
        pairs = (diagram.pairs - self.lo) / (self.hi - self.lo)
        if len(pairs) and (pairs.min() < -DOMAIN_TOL or pairs.max() > 1 + DOMAIN_TOL):
            raise ValueError("diagram lies outside the standardizer range")
        return PersistenceDiagram(diagram.dim, np.clip(pairs, 0.0, 1.0), diagram.representatives,
                                  diagram.birth_edges)


def fit_standardizer(diagrams) -> Standardizer:
    """Global min birth / max death over all diagrams."""
    nonempty = [d for d in diagrams if len(d)]
    if not nonempty:
        raise ValueError("cannot standardize: all diagrams are empty")
    lo = min(float(d.births.min()) for d in nonempty)
    hi = max(float(d.deaths.max()) for d in nonempty)
    return Standardizer(lo, hi)


def standardize(diagrams) -> tuple[Standardizer, list[PersistenceDiagram]]:
    diagrams = list(diagrams)
    std = fit_standardizer(diagrams)
    return std, [std.transform(d) for d in diagrams]


def _as_pairs(diagram) -> np.ndarray:
    if isinstance(diagram, PersistenceDiagram):
        return diagram.pairs
    return np.asarray(diagram, dtype=float).reshape(-1, 2)


def hk_coefficients(diagram, basis: TriangleBasis) -> HKVector:
    """Fourier coefficients of a standardized diagram."""
    pairs = _as_pairs(diagram)
    if len(pairs) == 0:
        return HKVector(basis, np.zeros(len(basis)), 0)
    x, y = pairs[:, 0], pairs[:, 1]
    if x.min() < -DOMAIN_TOL or y.max() > 1 + DOMAIN_TOL or np.any(x > y + DOMAIN_TOL):
        raise ValueError("diagram points must lie in the unit triangle 0 <= birth <= death <= 1")
    return HKVector(basis, basis.evaluate(x, y).sum(axis=0), len(pairs))


def coefficient_matrix(diagrams, basis: TriangleBasis) -> np.ndarray:
    """Stack of coefficient rows, one per standardized diagram."""
    return np.array([hk_coefficients(d, basis).coeffs for d in diagrams]).reshape(-1, len(basis))


def hk_evaluate(vector: HKVector, sigma: float, x, y) -> np.ndarray:
    """Degree-truncated heat-kernel estimate at ``(x, y)`` in the unit triangle."""
    w = vector.basis.weights(sigma)
    return vector.basis.evaluate(x, y) @ (w * vector.coeffs)


def _check_same_basis(v1: HKVector, v2: HKVector):
    if v1.basis.order != v2.basis.order:
        raise ValueError(f"basis mismatch: order {v1.basis.order} vs {v2.basis.order}")


def hk_distance(v1: HKVector, v2: HKVector, sigma: float = DEFAULT_SIGMA, squared: bool = False) -> float:
    """sum_k exp(-lambda_k sigma) (f1_k - f2_k)^2, or its square root."""
    _check_same_basis(v1, v2)
    d2 = float(np.sum(v1.basis.weights(sigma) * (v1.coeffs - v2.coeffs) ** 2))
    return d2 if squared else float(np.sqrt(d2))


def pairwise_sq_distances(coeffs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Matrix of weighted squared distances between coefficient rows."""
    c = np.asarray(coeffs, dtype=float)
    w = np.asarray(weights, dtype=float)
    d2 = np.empty((len(c), len(c)))
    # row-wise differences; the Gram expansion cancels badly for close rows
    for i in range(len(c)):
        d2[i] = ((c - c[i]) ** 2) @ w
    # BLAS may sum rows in different orders; mirror the upper triangle for exact symmetry
    upper = np.triu(d2, 1)
    return upper + upper.T


def grid_samples(vector: HKVector, sigma: float, resolution: int = 50) -> np.ndarray:
    """Estimate sampled on a regular grid of the triangle: rows (x, y, value)."""
    t = np.linspace(0.0, 1.0, resolution)
    xx, yy = np.meshgrid(t, t, indexing="ij")
    mask = xx <= yy
    x, y = xx[mask], yy[mask]
    return np.column_stack([x, y, hk_evaluate(vector, sigma, x, y)])
