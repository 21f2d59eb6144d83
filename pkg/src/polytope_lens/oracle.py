"""Ground truth for tiny networks: exhaustive lattice census of regions.

Lattices are ``resolution`` points per axis (``linspace`` including both
ends), so resolution ``2r - 1`` contains resolution ``r`` as a sublattice.
Regions thinner than the lattice step can be missed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import networkx as nx
import numpy as np

from ._parallel import chunks, pmap
from .code import LayerSpan, RegionAffine, SplineCode, code_bits, region_affine, span_output
from .errors import DegenerateInputError, InvalidInputError, UnsupportedError
from .net import Activation, Layer, PwlNetwork

MAX_DIM = 3
MIN_RESOLUTION = 8
COUNT_CAP = 2**63 - 1


@dataclass(frozen=True, eq=False)
class RegionCensus:
    codes: list[SplineCode]
    keys: np.ndarray            # packed code bytes, one row per region, sorted
    representatives: np.ndarray
    counts: np.ndarray
    sample_region: np.ndarray   # region index of every lattice point, C order
    bounds: tuple[tuple[float, float], ...]
    resolution: int
    span: LayerSpan

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def lattice_shape(self) -> tuple[int, ...]:
        return (self.resolution,) * len(self.bounds)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, self.resolution) for lo, hi in self.bounds]

    def points(self, flat_index) -> np.ndarray:
        idx = np.unravel_index(flat_index, self.lattice_shape)
        return np.stack([ax[i] for ax, i in zip(self.axes(), idx)], axis=-1)

    def code_set(self) -> set[bytes]:
        return {bytes(k) for k in self.keys}


def _check_bounds(bounds, dim: int) -> tuple[tuple[float, float], ...]:
    b = tuple((float(lo), float(hi)) for lo, hi in bounds)
    if len(b) != dim:
        raise InvalidInputError(f"need {dim} (lo, hi) bounds, got {len(b)}")
    if any(not hi > lo for lo, hi in b):
        raise InvalidInputError("every bound needs hi > lo")
    return b


def _unique_rows(packed: np.ndarray):
    """``np.unique(axis=0)`` for byte rows, via big-endian uint64 words (same order)."""
    n, width = packed.shape
    words = -(-width // 8)
    padded = np.zeros((n, words * 8), dtype=np.uint8)
    padded[:, :width] = packed
    cols = padded.view(">u8").astype(np.uint64)
    if words == 1:
        _, first, inverse, counts = np.unique(
            cols[:, 0], return_index=True, return_inverse=True, return_counts=True)
    else:
        order = np.lexsort(cols.T[::-1])
        srt = cols[order]
        new = np.ones(n, dtype=bool)
        new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
        group = np.cumsum(new) - 1
        inverse = np.empty(n, dtype=np.int64)
        inverse[order] = group
        starts = np.flatnonzero(new)
        counts = np.diff(np.append(starts, n))
        first = np.full(starts.size, n, dtype=np.int64)
        np.minimum.at(first, inverse, np.arange(n))
    return packed[first], first, inverse, counts


def enumerate_regions(net: PwlNetwork, span: LayerSpan, bounds: Sequence[tuple[float, float]],
                      resolution: int, points_per_task: int = 1 << 18) -> RegionCensus:
    """Evaluate codes on the full lattice over ``bounds`` and group identical codes.

    Regions are ordered by packed code bytes; each representative is the
    first lattice point (C order) carrying that code.
    """
    d = span.input_dim(net)
    if d > MAX_DIM:
        raise UnsupportedError(f"exhaustive lattices support input dimension <= {MAX_DIM}, got {d}")
    if resolution < MIN_RESOLUTION:
        raise InvalidInputError(f"resolution must be >= {MIN_RESOLUTION}")
    b = _check_bounds(bounds, d)
    axes = [np.linspace(lo, hi, resolution) for lo, hi in b]
    shape = (resolution,) * d
    total = resolution ** d

    def block(sl: slice) -> np.ndarray:
        idx = np.unravel_index(np.arange(sl.start, sl.stop), shape)
        pts = np.stack([ax[i] for ax, i in zip(axes, idx)], axis=-1)
        return np.packbits(code_bits(net, span, pts), axis=-1)

    packed = np.concatenate(pmap(block, chunks(total, points_per_task)), axis=0)
    if packed.shape[1] == 0:
        keys = np.zeros((1, 0), dtype=np.uint8)
        first = np.array([0])
        inverse = np.zeros(total, dtype=np.int64)
        counts = np.array([total])
    else:
        keys, first, inverse, counts = _unique_rows(packed)
    n_bits = span.code_length(net)
    offsets = span.offsets(net)
    codes = [SplineCode(np.unpackbits(k)[:n_bits], span, offsets) for k in keys]
    idx = np.unravel_index(first, shape)
    reps = np.stack([ax[i] for ax, i in zip(axes, idx)], axis=-1)
    return RegionCensus(codes, keys, reps, counts, inverse.reshape(-1), b, resolution, span)


def enumerate_stable(net: PwlNetwork, span: LayerSpan, bounds, start_resolution: int = 513,
                     max_resolution: int = 2049) -> tuple[RegionCensus, list[int]]:
    """Refine ``r -> 2r - 1`` until two consecutive lattices report the same region count.

    Returns the finest census and the count at every level. Raises if the
    count is still changing at ``max_resolution``. Two coarse lattices can
    miss the same thin region, hence the fine default start: with the
    ``generic_single_layer`` gap of 1% of the box every triangle has inradius
    above box / 300, and a 513-point lattice over twice the box samples it.
    """
    res = start_resolution
    census = enumerate_regions(net, span, bounds, res)
    history = [len(census)]
    while True:
        nxt = 2 * res - 1
        if nxt > max_resolution:
            raise DegenerateInputError(
                f"region count not stable by resolution {res}: {history}")
        census = enumerate_regions(net, span, bounds, nxt)
        history.append(len(census))
        res = nxt
        if history[-1] == history[-2]:
            return census, history


def region_count_bound(n_neurons: int, input_dim: int) -> int:
    """``min(2^N, sum_{i<=d} C(N, i))``, saturating at ``COUNT_CAP``."""
    if n_neurons < 0 or input_dim < 1:
        raise InvalidInputError("need n_neurons >= 0 and input_dim >= 1")
    arrangement = sum(math.comb(n_neurons, i) for i in range(min(input_dim, n_neurons) + 1))
    return min(2 ** n_neurons, arrangement, COUNT_CAP)


# --------------------------------------------------------------- verification


@dataclass(frozen=True)
class Violation:
    region: int
    sample: int
    error: float
    allowed: float


@dataclass(frozen=True, eq=False)
class VerifyReport:
    regions_checked: int
    samples_checked: int
    max_relative_error: float
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_regions(net: PwlNetwork, span: LayerSpan, census: RegionCensus,
                   tolerance: float = 1e-9,
                   affine_fn: Callable[[PwlNetwork, SplineCode], RegionAffine] = region_affine,
                   max_violations: int = 100) -> VerifyReport:
    """Check every lattice sample against the affine map of its region.

    A sample violates when ``|A x + b - f(x)| > tolerance * (1 + |f(x)|)``
    with ``f`` the traced span output.
    """
    if census.span != span or census.codes and len(census.codes[0]) != span.code_length(net):
        raise InvalidInputError("census was not built for this network/span")
    if len(census.bounds) != span.input_dim(net):
        raise InvalidInputError("census dimensionality does not match the span input")
    order = np.argsort(census.sample_region, kind="stable")
    starts = np.searchsorted(census.sample_region[order], np.arange(len(census) + 1))
    violations: list[Violation] = []
    worst = 0.0
    for r, code in enumerate(census.codes):
        flat = order[starts[r]:starts[r + 1]]
        X = census.points(flat)
        ra = affine_fn(net, code)
        want = span_output(net, span, X)
        got = X @ ra.A.T + ra.b
        err = np.linalg.norm(got - want, axis=1)
        scale = 1.0 + np.linalg.norm(want, axis=1)
        worst = max(worst, float((err / scale).max()))
        for k in np.flatnonzero(err > tolerance * scale):
            if len(violations) >= max_violations:
                break
            violations.append(Violation(r, int(flat[k]), float(err[k]), float(tolerance * scale[k])))
    return VerifyReport(len(census), int(census.sample_region.size), worst, violations)


def adjacency_graph(census: RegionCensus, min_resolution: int = 32) -> nx.Graph:
    """Regions as nodes; an edge wherever two axis-adjacent lattice points differ in region.

    Edge attributes: ``hamming`` (code distance) and ``contacts`` (adjacent
    lattice pairs observed).
    """
    if census.resolution < min_resolution:
        raise InvalidInputError(f"adjacency needs resolution >= {min_resolution}")
    grid = census.sample_region.reshape(census.lattice_shape)
    g = nx.Graph()
    for r, code in enumerate(census.codes):
        g.add_node(r, code=code, count=int(census.counts[r]))
    pairs = []
    for axis in range(grid.ndim):
        a = np.moveaxis(grid, axis, 0)
        lo, hi = a[:-1].reshape(-1), a[1:].reshape(-1)
        diff = lo != hi
        pairs.append(np.stack([np.minimum(lo[diff], hi[diff]), np.maximum(lo[diff], hi[diff])], 1))
    allp = np.concatenate(pairs) if pairs else np.zeros((0, 2), int)
    if allp.size == 0:
        return g
    uniq, contacts = np.unique(allp, axis=0, return_counts=True)
    for (r1, r2), c in zip(uniq, contacts):
        ham = int(np.count_nonzero(census.codes[r1].bits != census.codes[r2].bits))
        g.add_edge(int(r1), int(r2), hamming=ham, contacts=int(c))
    return g


# ------------------------------------------------------ generic arrangements


def _line_vertices(W: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(W.shape[0], 1)
    M = np.stack([W[i], W[j]], axis=1)
    rhs = -np.stack([b[i], b[j]], axis=1)
    return np.linalg.solve(M, rhs[..., None])[..., 0], np.stack([i, j], axis=1)


def _generic_violation(W: np.ndarray, b: np.ndarray, min_gap: float, max_cos: float):
    """None when the lines are in general position, else the box-relative vertex gap."""
    n = W.shape[0]
    if n < 2:
        return None
    cos = np.abs(W @ W.T)[np.triu_indices(n, 1)]
    if cos.max() > max_cos:
        return 0.0
    if n < 3:
        return None
    verts, pairs = _line_vertices(W, b)
    size = max(float((verts.max(axis=0) - verts.min(axis=0)).max()), 1.0)
    dist = np.abs(verts @ W.T + b)
    rows = np.arange(len(verts))
    dist[rows, pairs[:, 0]] = np.inf
    dist[rows, pairs[:, 1]] = np.inf
    gap = float(dist.min()) / size
    return None if gap >= min_gap else gap


def _place_lines(n: int, rng, min_gap: float, max_cos: float, max_tries: int):
    slots = rng.permutation(n)
    W = np.zeros((0, 2))
    b = np.zeros(0)
    for k in range(n):
        for _ in range(max_tries):
            theta = (slots[k] + rng.uniform()) * np.pi / n
            W_new = np.vstack([W, [np.cos(theta), np.sin(theta)]])
            b_new = np.append(b, rng.uniform(-1, 1))
            if _generic_violation(W_new, b_new, min_gap, max_cos) is None:
                W, b = W_new, b_new
                break
        else:
            return None, None
    return W, b


def generic_single_layer(n_neurons: int, seed: int, min_gap: float = 0.01,
                         max_cos: float = 0.999, max_tries: int = 1000,
                         restarts: int = 100
                         ) -> tuple[PwlNetwork, tuple[tuple[float, float], ...]]:
    """A ``2 -> N (ReLU) -> 1`` network whose lines are in general position, plus bounds.

    Lines get unit normals with stratified angles (one per ``pi / N`` slot, in
    shuffled order) and offsets in [-1, 1]. They are placed one at a time and
    the newest line is redrawn, up to ``max_tries`` times, while two lines are
    near-parallel (``|cos| > max_cos``) or some vertex lies within
    ``min_gap * box`` of a third line, ``box`` being the side of the vertex
    bounding box. A line that cannot be placed restarts the whole arrangement.
    Bounds are centred on that box with twice its side, so every
    region of the arrangement meets them.
    """
    if n_neurons < 1:
        raise InvalidInputError("need at least one neuron")
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        W, b = _place_lines(n_neurons, rng, min_gap, max_cos, max_tries)
        if W is not None:
            break
    else:
        raise DegenerateInputError(
            f"no general-position arrangement of {n_neurons} lines after {restarts} restarts")
    if n_neurons == 1:
        lo, hi = np.array([-2.0, -2.0]), np.array([2.0, 2.0])
    else:
        verts, _ = _line_vertices(W, b)
        vlo, vhi = verts.min(axis=0), verts.max(axis=0)
        size = max(float((vhi - vlo).max()), 1.0)
        centre = (vlo + vhi) / 2
        lo, hi = centre - size, centre + size
    hidden = Layer(W, b, Activation.RELU)
    out = Layer(np.ones((1, n_neurons)), np.zeros(1), Activation.IDENTITY)
    return PwlNetwork((hidden, out)), tuple(zip(lo.tolist(), hi.tolist()))
