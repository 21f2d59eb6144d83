"""Spline codes, per-region affine maps and region constraints.

A span ``(L, K)`` covers layers ``L..L+K``. Codes have one bit per ReLU
neuron in the span, layer-major; a neuron is active iff its pre-activation is
strictly positive. Regions live in the input space of layer ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError
from .net import ActivationTrace, Activation, Layer, PwlNetwork, forward_from_layer


@dataclass(frozen=True)
class LayerSpan:
    start: int
    count: int

    def __post_init__(self):
        if self.start < 0 or self.count < 1:
            raise InvalidInputError(f"invalid span start={self.start} count={self.count}")

    @classmethod
    def from_lk(cls, L: int, K: int) -> "LayerSpan":
        return cls(L, K + 1)

    @classmethod
    def to_output(cls, net: PwlNetwork, start: int) -> "LayerSpan":
        return cls(start, len(net) - start)

    @property
    def K(self) -> int:
        return self.count - 1

    @property
    def stop(self) -> int:
        return self.start + self.count

    def check(self, net: PwlNetwork) -> None:
        if self.stop > len(net):
            raise InvalidInputError(
                f"span {self.start}..{self.stop - 1} exceeds network with {len(net)} layers"
            )

    def relu_layers(self, net: PwlNetwork) -> list[int]:
        self.check(net)
        return [i for i in range(self.start, self.stop) if net.layers[i].is_relu]

    def offsets(self, net: PwlNetwork) -> tuple[int, ...]:
        out, pos = [], 0
        for i in self.relu_layers(net):
            out.append(pos)
            pos += net.layers[i].fan_out
        return tuple(out)

    def code_length(self, net: PwlNetwork) -> int:
        return sum(net.layers[i].fan_out for i in self.relu_layers(net))

    def input_dim(self, net: PwlNetwork) -> int:
        self.check(net)
        return net.layers[self.start].fan_in


@dataclass(frozen=True, eq=False)
class SplineCode:
    bits: np.ndarray
    span: LayerSpan
    layer_offsets: tuple[int, ...]

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool).reshape(-1)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "layer_offsets", tuple(int(o) for o in self.layer_offsets))

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, SplineCode):
            return NotImplemented
        return self.span == other.span and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.span, self.key()))

    def key(self) -> bytes:
        return np.packbits(self.bits).tobytes() + len(self).to_bytes(4, "big")

    def hex(self) -> str:
        """Bits packed MSB-first into bytes, hex encoded (last byte zero-padded)."""
        return np.packbits(self.bits).tobytes().hex()

    def dumps(self) -> str:
        """``L:K:M:offsets:hex`` with offsets comma separated."""
        offs = ",".join(str(o) for o in self.layer_offsets)
        return f"{self.span.start}:{self.span.K}:{len(self)}:{offs}:{self.hex()}"

    @classmethod
    def loads(cls, text: str) -> "SplineCode":
        try:
            L, K, M, offs, hx = text.strip().split(":")
            M = int(M)
            raw = np.frombuffer(bytes.fromhex(hx), dtype=np.uint8)
            bits = np.unpackbits(raw)[:M] if M else np.zeros(0, bool)
            offsets = tuple(int(o) for o in offs.split(",")) if offs else ()
        except ValueError as exc:
            raise InvalidInputError(f"malformed code dump {text!r}: {exc}") from exc
        if bits.size != M:
            raise InvalidInputError(f"code dump has {bits.size} bits, header says {M}")
        return cls(bits, LayerSpan.from_lk(int(L), int(K)), offsets)


def _check_trace_span(trace: ActivationTrace, span: LayerSpan) -> None:
    if span.start < trace.start_layer or span.stop > trace.stop_layer:
        raise InvalidInputError(
            f"span {span.start}..{span.stop - 1} not covered by trace of layers "
            f"{trace.start_layer}..{trace.stop_layer - 1}"
        )


def _trace_relu_layers(trace: ActivationTrace, span: LayerSpan) -> list[int]:
    return [i for i in range(span.start, span.stop)
            if trace.kinds[i - trace.start_layer] is Activation.RELU]


def extract_code(trace: ActivationTrace, span: LayerSpan) -> SplineCode:
    """Binary activation pattern of a single-input trace over ``span``."""
    _check_trace_span(trace, span)
    if trace.input.ndim != 1:
        raise InvalidInputError("extract_code takes a single-input trace; use code_bits for batches")
    parts, offsets, pos = [], [], 0
    for i in _trace_relu_layers(trace, span):
        pre = trace.layer_pre(i)
        offsets.append(pos)
        pos += pre.size
        parts.append(pre > 0)
    bits = np.concatenate(parts) if parts else np.zeros(0, dtype=bool)
    return SplineCode(bits, span, tuple(offsets))


def code_bits(net: PwlNetwork, span: LayerSpan, h) -> np.ndarray:
    """Boolean codes for points ``h`` in the span's input space.

    ``h`` has shape ``(d,)`` or ``(n, d)``; the result has shape ``(M,)`` or ``(n, M)``.
    Only layers up to the end of the span are evaluated.
    """
    span.check(net)
    cur = np.asarray(h, dtype=np.float64)
    if cur.shape[-1] != span.input_dim(net):
        raise InvalidInputError(
            f"expected span input of dimension {span.input_dim(net)}, got shape {cur.shape}"
        )
    parts = []
    for layer in net.layers[span.start:span.stop]:
        z = layer.preactivation(cur)
        if layer.is_relu:
            parts.append(z > 0)
        cur = layer.activation.apply(z)
    if not parts:
        return np.zeros(cur.shape[:-1] + (0,), dtype=bool)
    return np.concatenate(parts, axis=-1)


def code_at(net: PwlNetwork, span: LayerSpan, h) -> SplineCode:
    """Spline code of a single span-input point."""
    return SplineCode(code_bits(net, span, np.asarray(h, dtype=np.float64).reshape(-1)),
                      span, span.offsets(net))


def span_output(net: PwlNetwork, span: LayerSpan, h) -> np.ndarray:
    span.check(net)
    cur = np.asarray(h, dtype=np.float64)
    for layer in net.layers[span.start:span.stop]:
        cur = layer.activation.apply(layer.preactivation(cur))
    return cur


def hamming(c1: SplineCode, c2: SplineCode) -> int:
    if c1.span != c2.span or len(c1) != len(c2):
        raise InvalidInputError("codes come from different spans")
    return int(np.count_nonzero(c1.bits != c2.bits))


# ------------------------------------------------------------ region algebra


@dataclass(frozen=True, eq=False)
class RegionAffine:
    A: np.ndarray
    b: np.ndarray
    span: LayerSpan


@dataclass(frozen=True, eq=False)
class RegionConstraints:
    """Halfspaces ``normal . x + offset > 0`` (active) or ``<= 0`` (inactive)."""

    normals: np.ndarray
    offsets: np.ndarray
    active: np.ndarray
    span: LayerSpan

    def __len__(self) -> int:
        return self.offsets.size

    def values(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.normals.T + self.offsets

    def contains(self, x) -> np.ndarray | bool:
        """Membership test; vectorized over a leading batch axis."""
        v = self.values(x)
        ok = np.where(self.active, v > 0, v <= 0)
        res = np.all(ok, axis=-1)
        return bool(res) if res.ndim == 0 else res


def _check_code(net: PwlNetwork, code: SplineCode) -> None:
    code.span.check(net)
    if len(code) != code.span.code_length(net):
        raise InvalidInputError(
            f"code has {len(code)} bits but span needs {code.span.code_length(net)}"
        )


def _compose(net: PwlNetwork, code: SplineCode):
    """Walk the span, yielding masked affine maps; also collect neuron rows."""
    _check_code(net, code)
    d = code.span.input_dim(net)
    A = np.eye(d)
    b = np.zeros(d)
    rows_w, rows_b = [], []
    pos = 0
    for layer in net.layers[code.span.start:code.span.stop]:
        A_pre = layer.weights @ A
        b_pre = layer.weights @ b + layer.bias
        if layer.is_relu:
            mask = code.bits[pos:pos + layer.fan_out]
            pos += layer.fan_out
            rows_w.append(A_pre)
            rows_b.append(b_pre)
            A = A_pre * mask[:, None]
            b = b_pre * mask
        else:
            A, b = A_pre, b_pre
    return A, b, rows_w, rows_b


def region_affine(net: PwlNetwork, code: SplineCode) -> RegionAffine:
    """The affine map the span implements on the region named by ``code``.

    Computed algebraically, so it is defined even for infeasible codes.
    """
    A, b, _, _ = _compose(net, code)
    return RegionAffine(A, b, code.span)


def apply_region_affine(ra: RegionAffine, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != ra.A.shape[1]:
        raise InvalidInputError(f"expected dimension {ra.A.shape[1]}, got shape {x.shape}")
    return x @ ra.A.T + ra.b


def region_constraints(net: PwlNetwork, code: SplineCode) -> RegionConstraints:
    _, _, rows_w, rows_b = _compose(net, code)
    d = code.span.input_dim(net)
    normals = np.concatenate(rows_w) if rows_w else np.zeros((0, d))
    offsets = np.concatenate(rows_b) if rows_b else np.zeros(0)
    return RegionConstraints(normals, offsets, code.bits.copy(), code.span)


def region_affine_distance(r1: RegionAffine, r2: RegionAffine) -> float:
    """Frobenius distance between two affine maps, bias included as an extra column."""
    if r1.A.shape != r2.A.shape or r1.b.shape != r2.b.shape:
        raise InvalidInputError(f"shape mismatch {r1.A.shape} vs {r2.A.shape}")
    return float(np.sqrt(np.sum((r1.A - r2.A) ** 2) + np.sum((r1.b - r2.b) ** 2)))


# ------------------------------------------------------------- soft codes


@dataclass(frozen=True, eq=False)
class SoftCode:
    probabilities: np.ndarray
    temperature: float
    span: LayerSpan

    def harden(self) -> np.ndarray:
        return self.probabilities > 0.5


def _check_temperature(temperature: float) -> None:
    if not temperature > 0:
        raise InvalidInputError(f"temperature must be positive, got {temperature}")


def soft_code(trace: ActivationTrace, span: LayerSpan, temperature: float) -> SoftCode:
    """Per-neuron probability of being active: ``logistic(temperature * pre)``."""
    _check_temperature(temperature)
    _check_trace_span(trace, span)
    pres = [trace.layer_pre(i) for i in _trace_relu_layers(trace, span)]
    pre = np.concatenate(pres, axis=-1) if pres else np.zeros(0)
    return SoftCode(expit(temperature * pre), float(temperature), span)


def soft_region_map(layer: Layer, x, temperature: float) -> np.ndarray:
    """Probability-weighted mix of a ReLU layer's two affine pieces per neuron.

    Neuron ``i`` outputs ``p_i * (w_i . x + b_i)``; as the temperature grows
    this tends to the hard ReLU.
    """
    _check_temperature(temperature)
    if not layer.is_relu:
        raise InvalidInputError("soft_region_map needs a ReLU layer")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.fan_in:
        raise InvalidInputError(f"expected dimension {layer.fan_in}, got shape {x.shape}")
    z = layer.preactivation(x)
    return expit(temperature * z) * z


def partial_trace(net: PwlNetwork, span: LayerSpan, h) -> ActivationTrace:
    """Trace of the layers from the span start onward at a span-input point."""
    span.check(net)
    return forward_from_layer(net, span.start, h)[1]
