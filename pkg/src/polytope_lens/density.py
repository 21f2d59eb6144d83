"""Polytope-boundary density: between pairs, along paths, around points, along rays.

Density between two points is the Hamming distance of their spline codes
divided by their Euclidean distance. Everything here works in the input space
of the span's first layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from ._parallel import pmap
from .code import LayerSpan, code_bits
from .errors import DegenerateInputError, InvalidInputError
from .net import LabeledDataset, PwlNetwork, forward_from_layer, hidden_activation
from .stats import WelchResult, welch_t

COINCIDENT_TOL = 1e-12
DEFAULT_SAMPLES = 150
DEFAULT_RADIUS_FRACTION = 0.05
DEFAULT_PATH_POINTS = 256
DEFAULT_MAX_PAIRS = 2000


def pair_densities(net: PwlNetwork, span: LayerSpan, X, Y) -> np.ndarray:
    """Row-wise densities between ``X[i]`` and ``Y[i]``; NaN where the points coincide."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    ham = np.count_nonzero(code_bits(net, span, X) != code_bits(net, span, Y), axis=1)
    dist = np.linalg.norm(X - Y, axis=1)
    out = np.full(dist.shape, np.nan)
    ok = dist > COINCIDENT_TOL
    out[ok] = ham[ok] / dist[ok]
    return out


def pair_density(net: PwlNetwork, span: LayerSpan, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.linalg.norm(x - y) <= COINCIDENT_TOL:
        raise DegenerateInputError("density is undefined for coincident points")
    return float(pair_densities(net, span, x[None], y[None])[0])


# ------------------------------------------------------------ class reports


@dataclass(frozen=True, eq=False)
class DensityReport:
    """Normalized intra-/inter-class pair densities.

    Samples are stored already divided by ``normalization_constant`` (the raw
    mean over all kept pairs). When every raw density is zero the constant is
    zero and the samples stay zero.
    """

    intra_samples: np.ndarray
    inter_samples: np.ndarray
    normalization_constant: float
    span: LayerSpan
    skipped_intra: int = 0
    skipped_inter: int = 0

    @property
    def intra_mean(self) -> float:
        return float(self.intra_samples.mean())

    @property
    def inter_mean(self) -> float:
        return float(self.inter_samples.mean())

    @property
    def gap(self) -> float:
        return self.inter_mean - self.intra_mean

    def welch(self) -> WelchResult:
        return welch_t(self.intra_samples, self.inter_samples)


def _sample_pairs(mask_rows, mask_cols, max_pairs: int, rng) -> tuple[np.ndarray, np.ndarray]:
    if mask_rows.size > max_pairs:
        keep = np.sort(rng.choice(mask_rows.size, size=max_pairs, replace=False))
        return mask_rows[keep], mask_cols[keep]
    return mask_rows, mask_cols


def class_density_report(net: PwlNetwork, span: LayerSpan, data: LabeledDataset,
                         max_pairs: int = DEFAULT_MAX_PAIRS, seed: int = 0) -> DensityReport:
    """Pair densities of same-class and different-class activation pairs.

    Activations are taken at the input of ``span.start``. At most ``max_pairs``
    pairs per group are used, subsampled with a generator seeded by ``seed``.
    """
    span.check(net)
    counts = np.bincount(data.labels)
    if counts.size < 2 or counts.min() < 2:
        raise DegenerateInputError("need at least two classes with two points each")
    if max_pairs < 1:
        raise InvalidInputError("max_pairs must be positive")
    acts = hidden_activation(net, span.start, data.points)
    i, j = np.triu_indices(len(data), 1)
    same = data.labels[i] == data.labels[j]
    rng = np.random.default_rng(seed)
    ii, ij = _sample_pairs(i[same], j[same], max_pairs, rng)
    ei, ej = _sample_pairs(i[~same], j[~same], max_pairs, rng)
    intra = pair_densities(net, span, acts[ii], acts[ij])
    inter = pair_densities(net, span, acts[ei], acts[ej])
    skipped_intra = int(np.isnan(intra).sum())
    skipped_inter = int(np.isnan(inter).sum())
    intra, inter = intra[~np.isnan(intra)], inter[~np.isnan(inter)]
    if intra.size == 0 or inter.size == 0:
        raise DegenerateInputError("no non-coincident activation pairs in one of the groups")
    const = float(np.concatenate([intra, inter]).mean())
    if const > 0:
        intra, inter = intra / const, inter / const
    return DensityReport(intra, inter, const, span, skipped_intra, skipped_inter)


class LayerGap(NamedTuple):
    layer: int
    gap: float
    report: DensityReport


def layerwise_density_gap(net: PwlNetwork, data: LabeledDataset,
                          max_pairs: int = DEFAULT_MAX_PAIRS, seed: int = 0) -> list[LayerGap]:
    """Inter minus intra normalized density for spans starting at each hidden layer.

    Entry ``layer`` uses the span ``layer..output``, i.e. codes from hidden
    layer ``layer`` onward measured in that layer's input space. Every layer
    uses the same pair sample.
    """
    starts = [i for i, layer in enumerate(net.layers) if layer.is_relu]
    if not starts:
        raise InvalidInputError("network has no ReLU layers")
    out = []
    for L in starts:
        rep = class_density_report(net, LayerSpan.to_output(net, L), data, max_pairs, seed)
        out.append(LayerGap(L, rep.gap, rep))
    return out


# -------------------------------------------------------------------- paths


class PathMode(str, Enum):
    LINEAR = "linear"
    SPHERICAL = "spherical"


@dataclass(frozen=True, eq=False)
class PathSpec:
    a: np.ndarray
    b: np.ndarray
    mode: PathMode = PathMode.LINEAR
    n: int = DEFAULT_PATH_POINTS

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1:
            raise InvalidInputError(f"endpoint shapes differ: {a.shape} vs {b.shape}")
        if self.n < 2:
            raise InvalidInputError("a path needs at least two samples")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "mode", PathMode(self.mode))


def interpolate(spec: PathSpec) -> np.ndarray:
    """``n`` points from ``a`` to ``b`` (endpoints included), uniform in t."""
    t = np.linspace(0.0, 1.0, spec.n)[:, None]
    a, b = spec.a, spec.b
    if spec.mode is PathMode.LINEAR:
        return a + t * (b - a)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("spherical interpolation needs nonzero endpoints")
    cos = np.clip(a @ b / (na * nb), -1.0, 1.0)
    omega = np.arccos(cos)
    s = np.sin(omega)
    if s < 1e-12:
        if cos < 0:
            raise DegenerateInputError("antiparallel endpoints: the great circle is not unique")
        return a + t * (b - a)
    return (np.sin((1.0 - t) * omega) * a + np.sin(t * omega) * b) / s


class PathCrossings(NamedTuple):
    total_hamming: int
    per_segment: np.ndarray
    density: float


def path_crossings(net: PwlNetwork, span: LayerSpan, path) -> PathCrossings:
    P = np.asarray(path, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] < 2:
        raise InvalidInputError("path needs at least two points")
    codes = code_bits(net, span, P)
    per = np.count_nonzero(codes[1:] != codes[:-1], axis=1)
    arc = float(np.linalg.norm(np.diff(P, axis=0), axis=1).sum())
    if arc <= COINCIDENT_TOL:
        raise DegenerateInputError("path has zero arc length")
    total = int(per.sum())
    return PathCrossings(total, per, total / arc)


# ------------------------------------------------------------ local density


def default_radius(x) -> float:
    norm = float(np.linalg.norm(x))
    return DEFAULT_RADIUS_FRACTION * norm if norm > 0 else DEFAULT_RADIUS_FRACTION


def sphere_directions(dim: int, n: int, seed: int) -> np.ndarray:
    u = np.random.default_rng(seed).standard_normal((n, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def local_density(net: PwlNetwork, span: LayerSpan, x, radius: float | None = None,
                  n_samples: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    """Mean density between ``x`` and points on the sphere of ``radius`` around it."""
    x = np.asarray(x, dtype=np.float64)
    r = default_radius(x) if radius is None else radius
    if not r > 0:
        raise InvalidInputError(f"radius must be positive, got {radius}")
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    ys = x + r * sphere_directions(x.size, n_samples, seed)
    dens = pair_densities(net, span, np.broadcast_to(x, ys.shape), ys)
    return float(np.mean(dens))


# ------------------------------------------------------------------- sweeps


@dataclass(frozen=True, eq=False)
class SweepResult:
    alphas: np.ndarray
    logits: np.ndarray
    predicted_class: np.ndarray
    local_density: np.ndarray
    layer_index: int
    direction: np.ndarray = field(repr=False)

    @property
    def peak_alpha(self) -> float:
        return float(self.alphas[int(np.argmax(self.local_density))])

    def peak_ratio(self) -> float:
        """max / median of the density profile (inf when the median is zero)."""
        med = float(np.median(self.local_density))
        top = float(self.local_density.max())
        if med == 0:
            return np.inf if top > 0 else 1.0
        return top / med


def _check_alphas(alphas) -> np.ndarray:
    a = np.asarray(alphas, dtype=np.float64).reshape(-1)
    if a.size == 0:
        raise InvalidInputError("alpha list is empty")
    if np.any(a < 0) or np.any(np.diff(a) <= 0):
        raise InvalidInputError("alphas must be non-negative and strictly increasing")
    return a


def sweep_direction(net: PwlNetwork, layer_index: int, h0, alphas,
                    radius: float | str | None = "relative", n_samples: int = DEFAULT_SAMPLES,
                    seed: int = 0) -> SweepResult:
    """Scale a hidden activation ``h0`` by each alpha and probe logits and local density.

    ``radius``: ``"relative"`` uses 5% of the scaled vector's norm at each
    alpha, ``"anchor"`` fixes it at 5% of ``h0``'s norm for the whole sweep, a
    number fixes it outright. The same probe directions are reused at every
    alpha.
    """
    a = _check_alphas(alphas)
    h0 = np.asarray(h0, dtype=np.float64)
    span = LayerSpan.to_output(net, layer_index)
    fixed = None
    if radius == "anchor":
        fixed = default_radius(h0)
    elif radius not in (None, "relative"):
        fixed = float(radius)

    def one(alpha: float) -> tuple[np.ndarray, float]:
        h = alpha * h0
        logits, _ = forward_from_layer(net, layer_index, h)
        return logits, local_density(net, span, h, fixed, n_samples, seed)

    rows = pmap(one, list(a))
    logits = np.array([r[0] for r in rows])
    dens = np.array([r[1] for r in rows])
    # argmax already returns the lowest index on ties
    return SweepResult(a, logits, np.argmax(logits, axis=1), dens, layer_index, h0)


def scaling_sweep(net: PwlNetwork, layer_index: int, x, alphas, **kw) -> SweepResult:
    """Sweep along the ray through the hidden activation that input ``x`` produces."""
    return sweep_direction(net, layer_index, hidden_activation(net, layer_index, x), alphas, **kw)


def noise_direction(net: PwlNetwork, layer_index: int, reference, seed: int) -> np.ndarray:
    """Gaussian vector whose per-dimension scale is the RMS hidden activation on ``reference``."""
    acts = np.atleast_2d(hidden_activation(net, layer_index, np.asarray(reference)))
    scale = np.sqrt(np.mean(acts ** 2, axis=0))
    return np.random.default_rng(seed).standard_normal(scale.size) * scale


def noise_direction_sweep(net: PwlNetwork, layer_index: int, seed: int, alphas,
                          reference, **kw) -> SweepResult:
    h0 = noise_direction(net, layer_index, reference, seed)
    kw.setdefault("seed", seed)
    return sweep_direction(net, layer_index, h0, alphas, **kw)
