"""Seeded generators for the point-cloud and network simulation studies."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .ph import check_dissimilarity
from .rng import make_rng

KEYHOLE_VARIANTS = ("full", "quarter_TL", "quarter_TR", "quarter_BL", "quarter_BR")
QUARTERS = KEYHOLE_VARIANTS[1:]


@dataclass
class KeyShapeSpec:
    """Parametric key: an annulus (the keyhole) with a rectangular shaft.

    ``noise_cycle`` selects one of four anchor positions for a small extra
    annulus next to the keyhole; ``keyhole_variant`` keeps only one quarter of
    the keyhole band.
    """

    region: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 0.5)
    center: tuple[float, float] = (0.2, 0.25)
    outer_radius: float = 0.12
    inner_radius: float = 0.07
    shaft: tuple[float, float, float, float] = (0.31, 0.76, 0.22, 0.28)
    noise_outer: float = 0.035
    noise_inner: float = 0.02
    noise_gap: float = 0.01
    noise_cycle: int | None = None
    keyhole_variant: str = "full"
    key_fraction: float = 1.0

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError("keyhole needs 0 < inner radius < outer radius")
        if not 0 < self.noise_inner < self.noise_outer < self.inner_radius:
            raise ValueError("noise annulus must be strictly smaller than the keyhole annulus")
        if self.noise_gap <= 0:
            raise ValueError("noise annulus must be disjoint from the keyhole")
        if self.noise_cycle is not None and self.noise_cycle not in range(4):
            raise ValueError("noise_cycle must be None or an anchor index 0..3")
        if self.keyhole_variant not in KEYHOLE_VARIANTS:
            raise ValueError(f"keyhole_variant must be one of {KEYHOLE_VARIANTS}")
        if not 0 < self.key_fraction <= 1:
            raise ValueError("key_fraction must lie in (0, 1]")
        self.region = tuple(float(v) for v in self.region)
        self.center = tuple(float(v) for v in self.center)
        self.shaft = tuple(float(v) for v in self.shaft)

    def noise_anchors(self) -> np.ndarray:
        """Centres of the four possible noise annuli (top, upper-left, lower-left, bottom)."""
        r = self.outer_radius + self.noise_outer + self.noise_gap
        angles = np.deg2rad([90.0, 150.0, 210.0, 270.0])
        cx, cy = self.center
        return np.column_stack([cx + r * np.cos(angles), cy + r * np.sin(angles)])

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Mask of points lying on the key (band, shaft and optional noise ring)."""
        x, y = pts[:, 0], pts[:, 1]
        cx, cy = self.center
        rad = np.hypot(x - cx, y - cy)
        band = (rad >= self.inner_radius) & (rad <= self.outer_radius)
        if self.keyhole_variant != "full":
            top = self.keyhole_variant[-2] == "T"
            left = self.keyhole_variant[-1] == "L"
            band &= (y >= cy) if top else (y <= cy)
            band &= (x <= cx) if left else (x >= cx)
        x0, x1, y0, y1 = self.shaft
        # the shaft starts inside the band, but never inside the hole
        shaft = (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1) & (rad >= self.inner_radius)
        inside = band | shaft
        if self.noise_cycle is not None:
            nx, ny = self.noise_anchors()[self.noise_cycle]
            nr = np.hypot(x - nx, y - ny)
            inside |= (nr >= self.noise_inner) & (nr <= self.noise_outer)
        return inside

    def to_dict(self) -> dict:
        return asdict(self)


def sample_key_cloud(spec: KeyShapeSpec, n_points: int, seed, *stream: int) -> np.ndarray:
    """``floor(key_fraction * n)`` points uniform on the key, the rest uniform on the region."""
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    rng = make_rng(seed, *stream)
    n_key = int(np.floor(spec.key_fraction * n_points + 1e-9))
    x0, x1, y0, y1 = spec.region
    lo = np.array([x0, y0])
    span = np.array([x1 - x0, y1 - y0])
    key = np.empty((0, 2))
    while len(key) < n_key:
        cand = lo + span * rng.random((4 * (n_key - len(key)) + 64, 2))
        key = np.vstack([key, cand[spec.contains(cand)]])
    background = lo + span * rng.random((n_points - n_key, 2))
    return np.vstack([key[:n_key], background])


def sample_uniform_cloud(n_points: int, seed, *stream: int, region=(0.0, 1.0, 0.0, 0.5)) -> np.ndarray:
    rng = make_rng(seed, *stream)
    x0, x1, y0, y1 = region
    return np.array([x0, y0]) + np.array([x1 - x0, y1 - y0]) * rng.random((n_points, 2))


def _module_labels(n_nodes: int, modules) -> np.ndarray:
    if isinstance(modules, (int, np.integer)):
        if not 1 <= modules <= n_nodes:
            raise ValueError("number of modules must lie in 1..n_nodes")
        return np.arange(n_nodes) * int(modules) // n_nodes
    labels = np.full(n_nodes, -1)
    for k, members in enumerate(modules):
        members = np.asarray(list(members), dtype=int)
        if len(members) == 0 or members.min() < 0 or members.max() >= n_nodes:
            raise ValueError("module members must be valid node indices")
        if np.any(labels[members] >= 0) or len(np.unique(members)) != len(members):
            raise ValueError("modules must be disjoint")
        labels[members] = k
    if np.any(labels < 0):
        raise ValueError("modules must cover every node")
    return labels


def synth_network(n_nodes: int, modules, seed, *stream: int, n_samples: int = 100,
                  module_strength: float = 0.8) -> np.ndarray:
    """Module-structured network as 1 - |Pearson correlation| of synthetic signals.

    Every node observes its module's latent signal scaled by
    ``module_strength`` plus independent unit noise over ``n_samples`` time
    points, so within-module dissimilarities are low and between-module ones
    high.
    """
    if n_nodes < 4:
        raise ValueError("n_nodes must be at least 4")
    labels = _module_labels(n_nodes, modules)
    rng = make_rng(seed, *stream)
    latent = rng.standard_normal((labels.max() + 1, n_samples))
    signals = module_strength * latent[labels] + rng.standard_normal((n_nodes, n_samples))
    corr = np.corrcoef(signals)
    return similarity_to_dissimilarity(corr)


def similarity_to_dissimilarity(sim) -> np.ndarray:
    """d = 1 - |s| with a zero diagonal; ``s`` must lie in [-1, 1]."""
    s = np.asarray(sim, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("similarity matrix must be square")
    if not np.all(np.isfinite(s)) or np.any(np.abs(s) > 1 + 1e-12):
        raise ValueError("similarity entries must lie in [-1, 1]")
    d = 1.0 - np.minimum(np.abs(s), 1.0)
    d = np.triu(d, 1)
    return d + d.T


def perturb_network(dm, noise_sd: float, seed, *stream: int) -> np.ndarray:
    """Add one Gaussian draw per unordered pair; clamp at zero."""
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    dm = check_dissimilarity(dm)
    if noise_sd == 0:
        return dm.copy()
    n = dm.shape[0]
    rng = make_rng(seed, *stream)
    iu = np.triu_indices(n, 1)
    upper = np.maximum(dm[iu] + noise_sd * rng.standard_normal(len(iu[0])), 0.0)
    out = np.zeros_like(dm)
    out[iu] = upper
    return out + out.T


@dataclass
class LesionSpec:
    clusters: list[list[int]] = field(default_factory=list)
    noise_sd: float = 0.0

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        self.clusters = [[int(v) for v in c] for c in self.clusters]
        flat = [v for c in self.clusters for v in c]
        if len(flat) != len(set(flat)):
            raise ValueError("lesion clusters must be disjoint")

    @property
    def nodes(self) -> list[int]:
        return sorted(v for c in self.clusters for v in c)


def apply_lesion(dm, spec: LesionSpec, disconnect: str | float = "max") -> np.ndarray:
    """Knock out every edge incident to a lesioned node.

    ``disconnect="max"`` sets those edges to the largest dissimilarity in the
    matrix, so they enter the filtration last. ``"zero"`` writes literal
    zeros, which is the removal value when the weights are similarities.
    """
    dm = check_dissimilarity(dm)
    nodes = spec.nodes
    if not nodes:
        return dm.copy()
    n = dm.shape[0]
    if min(nodes) < 0 or max(nodes) >= n:
        raise IndexError(f"lesion node index out of range for a {n}-node network")
    if disconnect == "max":
        value = float(dm.max())
    elif disconnect == "zero":
        value = 0.0
    else:
        value = float(disconnect)
    out = dm.copy()
    out[nodes, :] = value
    out[:, nodes] = value
    np.fill_diagonal(out, 0.0)
    return out


def lesioned_sample(dm, spec: LesionSpec, seed, *stream: int, disconnect: str | float = "max") -> np.ndarray:
    """One simulated subject: Gaussian noise on the remaining edges, then the knockout.

    Knocked-out edges keep the exact disconnection value, so they enter the
    filtration together and create no noise-driven loops.
    """
    return apply_lesion(perturb_network(dm, spec.noise_sd, seed, *stream), spec, disconnect)
