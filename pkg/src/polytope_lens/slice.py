"""Rasterized polytope boundaries on a 2-D plane through activation space."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from ._parallel import chunks, pmap
from .code import LayerSpan, code_bits
from .errors import DegenerateInputError, InvalidInputError
from .net import PwlNetwork

DEFAULT_RESOLUTION = 512
DEFAULT_SIGMA = 2.0
EXTENT_PAD = 0.25


@dataclass(frozen=True, eq=False)
class Plane:
    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u, v = np.asarray(self.u, float), np.asarray(self.v, float)
        if abs(np.linalg.norm(u) - 1) > 1e-12 or abs(np.linalg.norm(v) - 1) > 1e-12:
            raise InvalidInputError("plane basis vectors must be unit length")
        if abs(u @ v) >= 1e-10:
            raise InvalidInputError("plane basis vectors must be orthogonal")
        object.__setattr__(self, "origin", np.asarray(self.origin, float))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def project(self, p) -> np.ndarray:
        """Plane coordinates ``(s, t)`` of points ``p``."""
        d = np.asarray(p, float) - self.origin
        return np.stack([d @ self.u, d @ self.v], axis=-1)

    def lift(self, s, t) -> np.ndarray:
        s = np.asarray(s, float)[..., None]
        t = np.asarray(t, float)[..., None]
        return self.origin + s * self.u + t * self.v


def plane_from_three(a, b, c) -> Plane:
    """Plane through ``a``, ``b``, ``c`` with origin ``a`` and ``u`` along ``b - a``."""
    a, b, c = (np.asarray(p, float) for p in (a, b, c))
    ab = b - a
    nab = np.linalg.norm(ab)
    if nab <= 1e-10:
        raise DegenerateInputError("anchors a and b coincide")
    u = ab / nab
    w = c - a
    w = w - (w @ u) * u
    # second pass keeps u.v at rounding level for nearly collinear inputs
    w = w - (w @ u) * u
    nw = np.linalg.norm(w)
    if nw <= 1e-10:
        raise DegenerateInputError("anchors are collinear")
    return Plane(a, u, w / nw)


@dataclass(frozen=True)
class Extent:
    s_min: float
    s_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        vals = (self.s_min, self.s_max, self.t_min, self.t_max)
        if not all(np.isfinite(vals)) or self.s_max <= self.s_min or self.t_max <= self.t_min:
            raise InvalidInputError(f"invalid extent {vals}")

    def axes(self, rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(self.s_min, self.s_max, rows),
                np.linspace(self.t_min, self.t_max, cols))


def anchor_extent(plane: Plane, anchors, pad: float = EXTENT_PAD) -> Extent:
    """Bounding box of the anchors' plane coordinates, padded by ``pad`` of its size per side."""
    st = plane.project(np.asarray(anchors, float))
    lo, hi = st.min(axis=0), st.max(axis=0)
    size = hi - lo
    size = np.where(size > 0, size, 1.0)
    lo, hi = lo - pad * size, hi + pad * size
    return Extent(lo[0], hi[0], lo[1], hi[1])


@dataclass(frozen=True, eq=False)
class CodeGrid:
    """Spline codes on a ``rows x cols`` lattice, bit-packed along the last axis."""

    packed: np.ndarray
    n_bits: int
    span: LayerSpan
    extent: Extent

    @property
    def shape(self) -> tuple[int, int]:
        return self.packed.shape[:2]

    def bits(self, i: int, j: int) -> np.ndarray:
        return np.unpackbits(self.packed[i, j])[: self.n_bits].astype(bool)


def _check_resolution(resolution) -> tuple[int, int]:
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    rows, cols = (int(r) for r in resolution)
    if rows < 2 or cols < 2:
        raise InvalidInputError("grid resolution must be at least 2x2")
    return rows, cols


def evaluate_grid(net: PwlNetwork, span: LayerSpan, plane: Plane, resolution,
                  extent: Extent, rows_per_task: int = 16) -> CodeGrid:
    """Codes at ``origin + s_i u + t_j v`` for the uniform lattice over ``extent``.

    Row ``i`` follows ``u`` and column ``j`` follows ``v``.
    """
    rows, cols = _check_resolution(resolution)
    if plane.origin.size != span.input_dim(net):
        raise InvalidInputError("plane lives in a different space than the span input")
    s, t = extent.axes(rows, cols)
    n_bits = span.code_length(net)

    def block(sl: slice) -> np.ndarray:
        pts = plane.lift(s[sl, None], t[None, :])
        bits = code_bits(net, span, pts.reshape(-1, pts.shape[-1]))
        return np.packbits(bits, axis=-1).reshape(sl.stop - sl.start, cols, -1)

    packed = np.concatenate(pmap(block, chunks(rows, rows_per_task)), axis=0)
    return CodeGrid(packed, n_bits, span, extent)


@dataclass(frozen=True, eq=False)
class BoundaryField:
    values: np.ndarray
    extent: Extent | None = None

    @property
    def resolution(self) -> tuple[int, int]:
        return self.values.shape


def _popcount_xor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.bitwise_xor(a, b)).sum(axis=-1, dtype=np.int64)


def boundary_field(grid: CodeGrid) -> BoundaryField:
    """Per pixel: Hamming distance to the right neighbour plus to the lower neighbour."""
    p = grid.packed
    if p.shape[0] < 2 or p.shape[1] < 2:
        raise InvalidInputError("boundary field needs at least a 2x2 grid")
    vals = np.zeros(p.shape[:2], dtype=np.float64)
    if p.shape[2]:
        vals[:, :-1] += _popcount_xor(p[:, :-1], p[:, 1:])
        vals[:-1, :] += _popcount_xor(p[:-1, :], p[1:, :])
    return BoundaryField(vals, grid.extent)


def gaussian_smooth(field: BoundaryField, sigma: float) -> BoundaryField:
    """Separable normalized Gaussian, truncated at 3 sigma, half-sample reflective edges."""
    if not sigma >= 0:
        raise InvalidInputError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return BoundaryField(field.values.copy(), field.extent)
    out = gaussian_filter(field.values, sigma=sigma, mode="reflect", truncate=3.0)
    return BoundaryField(out, field.extent)


class Scale(str, Enum):
    LINEAR = "linear"
    LOG1P = "log1p"


def to_gray(field: BoundaryField, scale: Scale | str = Scale.LINEAR) -> np.ndarray:
    """8-bit levels: ``floor(255 * f(v) / max f)``; an all-zero field stays black."""
    v = np.asarray(field.values, float)
    if Scale(scale) is Scale.LOG1P:
        v = np.log1p(v)
    top = v.max() if v.size else 0.0
    if top <= 0:
        return np.zeros(v.shape, dtype=np.uint8)
    return np.clip(np.floor(v * 255.0 / top), 0, 255).astype(np.uint8)


def export_image(field: BoundaryField, path, scale: Scale | str = Scale.LINEAR) -> Path:
    """Write a binary PGM (P5, maxval 255)."""
    gray = to_gray(field, scale)
    rows, cols = gray.shape
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise InvalidInputError(f"{path}: not a binary PGM")
    cols, rows = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[pos + 1:pos + 1 + rows * cols], dtype=np.uint8)
    return pixels.reshape(rows, cols)


def write_sidecar(path, plane: Plane, extent: Extent, resolution, span: LayerSpan,
                  sigma: float, scale: str) -> Path:
    rows, cols = _check_resolution(resolution)
    doc = {
        "origin": plane.origin.tolist(),
        "u": plane.u.tolist(),
        "v": plane.v.tolist(),
        "extent": [extent.s_min, extent.s_max, extent.t_min, extent.t_max],
        "resolution": [rows, cols],
        "span": [span.start, span.K],
        "sigma": sigma,
        "scale": scale,
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def triangle_mask(plane: Plane, anchors, extent: Extent, resolution) -> np.ndarray:
    """Pixels strictly inside the triangle spanned by the anchors' projections."""
    rows, cols = _check_resolution(resolution)
    tri = plane.project(np.asarray(anchors, float))
    s, t = extent.axes(rows, cols)
    S, T = np.meshgrid(s, t, indexing="ij")
    p0, p1, p2 = tri
    det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
    l1 = ((S - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (T - p0[1])) / det
    l2 = ((p1[0] - p0[0]) * (T - p0[1]) - (S - p0[0]) * (p1[1] - p0[1])) / det
    l0 = 1.0 - l1 - l2
    return (l0 > 0) & (l1 > 0) & (l2 > 0)
