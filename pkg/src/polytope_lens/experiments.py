"""Desk-scale experiment protocols shared by the CLI, scripts and acceptance tests.

Every function is a pure function of its seed. Constants below pin the
protocol; change them here, not at call sites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cluster as cl
from .code import LayerSpan, code_bits, region_affine
from .density import (DensityReport, SweepResult, class_density_report, layerwise_density_gap,
                      noise_direction_sweep, scaling_sweep)
from .net import (LabeledDataset, Layer, PwlNetwork, TrainConfig, accuracy, hidden_activation,
                  init_random, make_blobs, train)
from .oracle import enumerate_regions
from .slice import (anchor_extent, boundary_field, evaluate_grid, gaussian_smooth,
                    plane_from_three, triangle_mask)
from .stats import WelchResult

BLOBS = dict(k=3, n_per_class=100, dim=2, spread=1.0)
TRAIN = dict(learning_rate=0.05, epochs=200, batch_size=32)
PREDICTION_SIZES = (2, 16, 16, 16, 3)
SLICE_SIZES = (2, 32, 32, 3)
ALPHAS = np.linspace(0.0, 4.0, 41)
SWEEP_LAYER = 1
SWEEP_INPUTS = 20
P_THRESHOLD = 0.01
# with k balanced classes most pairs are inter-class, so half the median spans a class gap
CLUSTER_EPS_FRACTION = 0.25
CLUSTER_LAYER = 1


@dataclass(frozen=True, eq=False)
class ToySetup:
    seed: int
    data: LabeledDataset
    untrained: PwlNetwork
    trained: PwlNetwork
    loss_history: list[float]

    @property
    def train_accuracy(self) -> float:
        return accuracy(self.trained, self.data)


def toy_setup(seed: int, sizes=PREDICTION_SIZES) -> ToySetup:
    data = make_blobs(seed=seed, **BLOBS)
    net0 = init_random(sizes, seed)
    net, hist = train(net0, data, TrainConfig(seed=seed, **TRAIN))
    return ToySetup(seed, data, net0, net, hist)


def random_toy_net(sizes, seed: int, bias_scale: float = 0.5) -> PwlNetwork:
    """Seeded init plus Gaussian biases, so regions do not all meet at the origin."""
    net = init_random(sizes, seed)
    rng = np.random.default_rng([seed, 1])
    return PwlNetwork(tuple(
        Layer(l.weights, rng.normal(0.0, bias_scale, l.fan_out), l.activation) for l in net.layers
    ))


# ------------------------------------------------------------ Prediction 2


@dataclass(frozen=True, eq=False)
class Prediction2:
    seed: int
    trained: DensityReport
    untrained: DensityReport
    trained_test: WelchResult
    untrained_test: WelchResult
    trained_gaps: list
    untrained_gaps: list

    @property
    def trained_effect(self) -> bool:
        return self.trained_test.t < 0 and self.trained_test.p_two_sided < P_THRESHOLD

    @property
    def untrained_null(self) -> bool:
        return not self.untrained_test.p_two_sided < P_THRESHOLD

    @property
    def passed(self) -> bool:
        return self.trained_effect and self.untrained_null

    @property
    def layer_trend(self) -> bool:
        return self.trained_gaps[-1].gap > self.trained_gaps[0].gap


def prediction2(setup: ToySetup, span_start: int = 0, max_pairs: int = 2000) -> Prediction2:
    """Intra- vs inter-class density on the trained net and its own initialization."""
    s = setup
    span_t = LayerSpan.to_output(s.trained, span_start)
    rep_t = class_density_report(s.trained, span_t, s.data, max_pairs, s.seed)
    rep_u = class_density_report(s.untrained, span_t, s.data, max_pairs, s.seed)
    gaps_t = layerwise_density_gap(s.trained, s.data, max_pairs, s.seed)
    gaps_u = layerwise_density_gap(s.untrained, s.data, max_pairs, s.seed)
    return Prediction2(s.seed, rep_t, rep_u, rep_t.welch(), rep_u.welch(), gaps_t, gaps_u)


# ------------------------------------------------------------ Prediction 3


@dataclass(frozen=True, eq=False)
class Prediction3:
    seed: int
    trained: list[SweepResult]
    untrained: list[SweepResult]
    noise: list[SweepResult]
    input_indices: np.ndarray

    @staticmethod
    def _inside(sweeps) -> float:
        return float(np.mean([0.0 < s.peak_alpha < 1.0 for s in sweeps]))

    @property
    def trained_peak_fraction(self) -> float:
        return self._inside(self.trained)

    @property
    def noise_peak_fraction(self) -> float:
        return self._inside(self.noise)

    @property
    def ratio_fraction(self) -> float:
        """Share of paired inputs where the untrained max/median ratio is below the trained one."""
        return float(np.mean([u.peak_ratio() < t.peak_ratio()
                              for t, u in zip(self.trained, self.untrained)]))


def prediction3(setup: ToySetup, n_inputs: int = SWEEP_INPUTS, layer: int = SWEEP_LAYER,
                alphas=ALPHAS, n_samples: int = 150) -> Prediction3:
    s = setup
    idx = np.sort(np.random.default_rng([s.seed, 3]).choice(len(s.data), n_inputs, replace=False))
    tr, un, no = [], [], []
    for k, i in enumerate(idx):
        x = s.data.points[i]
        tr.append(scaling_sweep(s.trained, layer, x, alphas, n_samples=n_samples, seed=int(i)))
        un.append(scaling_sweep(s.untrained, layer, x, alphas, n_samples=n_samples, seed=int(i)))
        no.append(noise_direction_sweep(s.trained, layer, s.seed * 1000 + k, alphas,
                                        s.data.points, n_samples=n_samples))
    return Prediction3(s.seed, tr, un, no, idx)


# ------------------------------------------------------------ Prediction 1


@dataclass(frozen=True, eq=False)
class Prediction1:
    seed: int
    activation_labels: cl.ClusterLabels
    code_labels: cl.ClusterLabels
    agreement: float
    shuffled_agreement: float
    purity: float
    shuffled_purity: float
    nmf: cl.NmfFactors

    @property
    def passed(self) -> bool:
        return self.agreement > self.shuffled_agreement and self.purity > self.shuffled_purity


def prediction1(setup: ToySetup, layer: int = CLUSTER_LAYER, nmf_k: int = 4,
                nmf_iters: int = 500, min_pts: int = 5,
                eps_fraction: float = CLUSTER_EPS_FRACTION) -> Prediction1:
    """Cluster hidden activations (Euclidean) and their codes (Hamming) and compare."""
    s = setup
    net = s.trained
    acts = hidden_activation(net, layer, s.data.points)
    codes = code_bits(net, LayerSpan.to_output(net, layer), acts)
    dm_a = cl.distance_matrix(acts, cl.Metric.EUCLIDEAN)
    dm_c = cl.distance_matrix(codes, cl.Metric.HAMMING)
    lab_a = cl.cluster(dm_a, eps_fraction * dm_a.median(), min_pts)
    # Hamming distances are integers; eps below 1 would only join identical codes
    lab_c = cl.cluster(dm_c, max(eps_fraction * dm_c.median(), 0.5), min_pts)
    rng = np.random.default_rng([s.seed, 1])
    agree = cl.adjusted_rand_index(lab_c.labels, lab_a.labels)
    agree_sh = cl.adjusted_rand_index(lab_c.labels, rng.permutation(lab_a.labels))
    pur = cl.monosemanticity_score(lab_a, s.data.labels).mean
    pur_sh = cl.monosemanticity_score(lab_a, rng.permutation(s.data.labels)).mean
    factors = cl.nmf(acts, min(nmf_k, *acts.shape), nmf_iters, s.seed)
    return Prediction1(s.seed, lab_a, lab_c, agree, agree_sh, pur, pur_sh, factors)


# ------------------------------------------------------------------ slices


@dataclass(frozen=True, eq=False)
class SliceRun:
    field: object
    smoothed: object
    triangle_mean: float
    field_mean: float
    mass_error: float
    plane: object
    extent: object
    span: LayerSpan

    @property
    def central_denser(self) -> bool:
        return self.triangle_mean > self.field_mean


def slice_experiment(setup: ToySetup, span_start: int = 1, resolution: int = 512,
                     sigma: float = 2.0) -> SliceRun:
    """Slice through the activations of the first example of each of three classes."""
    net, data = setup.trained, setup.data
    anchor_idx = [int(np.flatnonzero(data.labels == c)[0]) for c in range(3)]
    anchors = hidden_activation(net, span_start, data.points[anchor_idx])
    span = LayerSpan.to_output(net, span_start)
    plane = plane_from_three(*anchors)
    ext = anchor_extent(plane, anchors)
    grid = evaluate_grid(net, span, plane, resolution, ext)
    f = boundary_field(grid)
    sm = gaussian_smooth(f, sigma)
    mask = triangle_mask(plane, anchors, ext, resolution)
    total = f.values.sum()
    mass = abs(sm.values.sum() - total) / total if total else 0.0
    return SliceRun(f, sm, float(sm.values[mask].mean()), float(sm.values.mean()),
                    float(mass), plane, ext, span)


# ------------------------------------------------------ transformation trend


@dataclass(frozen=True)
class TransformTrend:
    regions: int
    mean_h1: float
    mean_h3: float
    pairs_h1: int
    pairs_h3: int

    @property
    def passed(self) -> bool:
        return self.pairs_h1 > 0 and self.pairs_h3 > 0 and self.mean_h1 < self.mean_h3


def transformation_trend(net: PwlNetwork, bounds, resolution: int = 257) -> TransformTrend:
    """Mean affine distance of region pairs at Hamming 1 versus Hamming >= 3."""
    span = LayerSpan.to_output(net, 0)
    census = enumerate_regions(net, span, bounds, resolution)
    bits = np.array([c.bits for c in census.codes])
    flat = np.array([np.concatenate([ra.A.ravel(), ra.b])
                     for ra in (region_affine(net, c) for c in census.codes)])
    i, j = np.triu_indices(len(census), 1)
    ham = np.count_nonzero(bits[i] != bits[j], axis=1)
    dist = np.linalg.norm(flat[i] - flat[j], axis=1)
    h1, h3 = ham == 1, ham >= 3
    return TransformTrend(len(census), float(dist[h1].mean()) if h1.any() else np.nan,
                          float(dist[h3].mean()) if h3.any() else np.nan,
                          int(h1.sum()), int(h3.sum()))


def data_bounds(data: LabeledDataset, pad: float = 0.25) -> tuple[tuple[float, float], ...]:
    lo, hi = data.points.min(axis=0), data.points.max(axis=0)
    size = hi - lo
    return tuple(zip((lo - pad * size).tolist(), (hi + pad * size).tolist()))
