"""``polytope`` command line.

Every command writing files takes ``--out DIR`` and leaves a ``manifest.json``
there (argv, parsed config, tool version, SHA-256 of input files). Exit
status: 0 success, 2 invalid input or usage, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import cluster as cl
from . import density as dn
from . import experiments as ex
from . import oracle as orc
from . import slice as sl
from . import stats as st
from ._parallel import set_threads
from .code import LayerSpan, code_at, code_bits, partial_trace, soft_code
from .errors import InvalidInputError, PolytopeError
from .net import (TrainConfig, hidden_activation, init_random, load_dataset, load_network,
                  make_blobs, save_dataset, save_network, train)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def _strip_threads(argv) -> list[str]:
    # worker count never changes results, so it stays out of the manifest
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
        elif a == "--threads":
            skip = True
        elif not a.startswith("--threads="):
            out.append(a)
    return out


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Output directory plus the manifest describing how it was produced."""

    def __init__(self, args, argv, inputs=()):
        self.dir = Path(args.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        config = {k: v for k, v in vars(args).items() if k not in ("func", "threads")}
        self.manifest = {
            "tool": "polytope",
            "version": __version__,
            "argv": _strip_threads(argv),
            "config": config,
            "inputs": {str(p): _digest(p) for p in inputs if p},
            "outputs": [],
        }

    def csv(self, name, header, rows) -> Path:
        self.manifest["outputs"].append(name)
        return write_csv(self.dir / name, header, rows)

    def path(self, name) -> Path:
        self.manifest["outputs"].append(name)
        return self.dir / name

    def close(self) -> None:
        (self.dir / "manifest.json").write_text(json.dumps(self.manifest, indent=1, sort_keys=True) + "\n")


def _span(args, net) -> LayerSpan:
    L, K = args.span
    span = LayerSpan.from_lk(L, K)
    span.check(net)
    return span


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from exc


def _alphas(text: str) -> np.ndarray:
    if text.count(":") == 2:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    return _floats(text)


def _bounds(values):
    v = np.asarray(values, dtype=np.float64)
    if v.size % 2:
        raise InvalidInputError("--bounds needs lo,hi pairs")
    return [(v[i], v[i + 1]) for i in range(0, v.size, 2)]


def _read_matrix(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        return np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------- commands


def cmd_gen_data(args, argv):
    run = Run(args, argv)
    data = make_blobs(args.k, args.n_per_class, args.dim, args.spread, args.seed, args.center_box)
    save_dataset(data, run.path("data.csv"))
    run.close()


def cmd_train(args, argv):
    run = Run(args, argv, [args.data])
    data = load_dataset(args.data)
    sizes = [int(s) for s in args.sizes.split(",")]
    net0 = init_random(sizes, args.seed)
    cfg = TrainConfig(args.lr, args.epochs, args.batch_size, args.seed)
    net, hist = train(net0, data, cfg)
    save_network(net, run.path("net.json"))
    save_network(net0, run.path("init.json"))
    run.csv("loss.csv", ["epoch", "loss"], enumerate(hist))
    run.close()


def cmd_code(args, argv):
    net = load_network(args.net)
    span = _span(args, net)
    x = _floats(args.input)
    h = hidden_activation(net, span.start, x) if args.space == "input" else x
    code = code_at(net, span, h)
    print(code.dumps())
    print(f"M={len(code)} hex={code.hex()}")
    if args.temperature is not None:
        sc = soft_code(partial_trace(net, span, h), span, args.temperature)
        print("soft=" + ",".join(fmt(p) for p in sc.probabilities))


def cmd_density(args, argv):
    run = Run(args, argv, [args.net, args.data])
    net, data = load_network(args.net), load_dataset(args.data)
    span = _span(args, net)
    rep = dn.class_density_report(net, span, data, args.max_pairs, args.seed)
    w = rep.welch()
    rows = [("intra", i, v) for i, v in enumerate(rep.intra_samples)]
    rows += [("inter", i, v) for i, v in enumerate(rep.inter_samples)]
    run.csv("pairs.csv", ["group", "pair", "normalized_density"], rows)
    ci_a = st.bootstrap_ci(rep.intra_samples, "mean", 0.99, args.resamples, args.seed)
    ci_b = st.bootstrap_ci(rep.inter_samples, "mean", 0.99, args.resamples, args.seed + 1)
    run.csv("summary.csv",
            ["intra_mean", "inter_mean", "intra_ci_low", "intra_ci_high", "inter_ci_low",
             "inter_ci_high", "normalization_constant", "t", "dof", "p", "skipped_intra",
             "skipped_inter"],
            [(rep.intra_mean, rep.inter_mean, ci_a.low, ci_a.high, ci_b.low, ci_b.high,
              rep.normalization_constant, w.t, w.dof, w.p_two_sided,
              rep.skipped_intra, rep.skipped_inter)])
    run.close()


def cmd_layer_gap(args, argv):
    run = Run(args, argv, [args.net, args.data])
    net, data = load_network(args.net), load_dataset(args.data)
    gaps = dn.layerwise_density_gap(net, data, args.max_pairs, args.seed)
    rows = []
    for g in gaps:
        w = g.report.welch()
        rows.append((g.layer, g.report.intra_mean, g.report.inter_mean, g.gap, w.t, w.p_two_sided))
    run.csv("layer_gap.csv", ["layer", "intra_mean", "inter_mean", "gap", "t", "p"], rows)
    run.close()


def cmd_interpolate(args, argv):
    run = Run(args, argv, [args.net, args.data])
    net, data = load_network(args.net), load_dataset(args.data)
    span = _span(args, net)
    acts = hidden_activation(net, span.start, data.points)
    rng = np.random.default_rng(args.seed)
    rows = []
    for p in range(args.paths):
        i, j = (int(v) for v in rng.choice(len(data), 2, replace=False))
        path = dn.interpolate(dn.PathSpec(acts[i], acts[j], args.mode, args.n))
        cross = dn.path_crossings(net, span, path)
        t = np.linspace(0.0, 1.0, args.n)
        seg = np.concatenate([[0], cross.per_segment])
        for k in range(args.n):
            dens = dn.local_density(net, span, path[k], None, args.samples, args.seed + k)
            rows.append((p, i, j, int(data.labels[i] == data.labels[j]), t[k], seg[k], dens))
    run.csv("interpolation.csv",
            ["path", "a_index", "b_index", "same_class", "t", "segment_hamming", "local_density"],
            rows)
    run.close()


def _sweep_rows(tag, sweep: dn.SweepResult):
    for a, lg, c, d in zip(sweep.alphas, sweep.logits, sweep.predicted_class, sweep.local_density):
        yield (tag, a, d, c, *lg)


def cmd_sweep(args, argv):
    run = Run(args, argv, [args.net, args.data])
    net, data = load_network(args.net), load_dataset(args.data)
    alphas = _alphas(args.alphas)
    kw = dict(radius=args.radius, n_samples=args.samples)
    rows = []
    if args.noise:
        for k in range(args.inputs):
            s = dn.noise_direction_sweep(net, args.layer, args.seed + k, alphas, data.points, **kw)
            rows.extend(_sweep_rows(f"noise{k}", s))
    else:
        idx = np.random.default_rng(args.seed).choice(len(data), args.inputs, replace=False)
        for i in sorted(int(v) for v in idx):
            s = dn.scaling_sweep(net, args.layer, data.points[i], alphas, seed=args.seed + i, **kw)
            rows.extend(_sweep_rows(f"input{i}", s))
    header = ["direction", "alpha", "local_density", "predicted_class"]
    header += [f"logit{c}" for c in range(net.output_dim)]
    run.csv("sweep.csv", header, rows)
    run.close()


def cmd_slice(args, argv):
    run = Run(args, argv, [args.net, args.anchors])
    net = load_network(args.net)
    span = _span(args, net)
    anchors = _read_matrix(args.anchors)
    if anchors.shape[0] != 3:
        raise InvalidInputError("anchor file needs exactly three rows")
    if args.anchor_space == "input":
        anchors = hidden_activation(net, span.start, anchors)
    plane = sl.plane_from_three(*anchors)
    ext = sl.anchor_extent(plane, anchors)
    grid = sl.evaluate_grid(net, span, plane, args.res, ext)
    field = sl.boundary_field(grid)
    smooth = sl.gaussian_smooth(field, args.sigma)
    sl.export_image(smooth, run.path("slice.pgm"), args.scale)
    sl.write_sidecar(run.path("slice.json"), plane, ext, args.res, span, args.sigma, args.scale)
    mask = sl.triangle_mask(plane, anchors, ext, args.res)
    run.csv("summary.csv", ["field_sum", "smoothed_sum", "field_mean", "triangle_mean"],
            [(field.values.sum(), smooth.values.sum(), smooth.values.mean(),
              smooth.values[mask].mean() if mask.any() else float("nan"))])
    run.close()


def _layer_items(args, net, data):
    acts = hidden_activation(net, args.layer, data.points)
    if args.metric == "hamming":
        return code_bits(net, LayerSpan.to_output(net, args.layer), acts), acts
    return acts, acts


def cmd_cluster(args, argv):
    run = Run(args, argv, [args.net, args.data])
    net, data = load_network(args.net), load_dataset(args.data)
    items, _ = _layer_items(args, net, data)
    dm = cl.distance_matrix(items, args.metric)
    eps = args.eps if args.eps is not None else cl.default_eps(dm)
    labels = cl.cluster(dm, eps, args.min_pts)
    run.csv("labels.csv", ["index", "cluster", "class"],
            zip(range(len(data)), labels.labels, data.labels))
    pur = cl.monosemanticity_score(labels, data.labels)
    run.csv("purity.csv", ["cluster", "purity"], sorted(pur.per_cluster.items()) + [("mean", pur.mean)])
    run.close()


def cmd_nmf(args, argv):
    run = Run(args, argv, [args.net, args.data, args.labels])
    net, data = load_network(args.net), load_dataset(args.data)
    acts = hidden_activation(net, args.layer, data.points)
    X = cl.shift_to_min(acts) if args.shift else acts
    f = cl.nmf(X, args.k, args.iters, args.seed)
    run.csv("W.csv", [f"c{i}" for i in range(f.W.shape[1])], f.W)
    run.csv("H.csv", [f"d{i}" for i in range(f.H.shape[1])], f.H)
    run.csv("history.csv", ["iteration", "squared_error"], enumerate(f.reconstruction_history))
    if args.labels:
        with open(args.labels, newline="") as fh:
            lab = np.array([int(r["cluster"]) for r in csv.DictReader(fh)])
        labels = cl.ClusterLabels(lab, int(lab.max()) + 1 if lab.size else 0)
        edges = np.linspace(-1.0, 1.0, 51)
        rows = []
        for comp in range(f.H.shape[0]):
            prof = cl.cosine_profile(f.H[comp], acts, labels)
            for c in sorted(prof.by_cluster):
                for b, count in enumerate(prof.histogram(c)):
                    rows.append((comp, c, edges[b], edges[b + 1], count))
        run.csv("cosine_hist.csv", ["component", "cluster", "bin_low", "bin_high", "count"], rows)
    run.close()


def cmd_oracle(args, argv):
    run = Run(args, argv, [args.net])
    net = load_network(args.net)
    span = _span(args, net)
    census = orc.enumerate_regions(net, span, _bounds(args.bounds), args.res)
    if args.action == "enumerate":
        d = census.representatives.shape[1]
        run.csv("census.csv", ["code_hex", *[f"x{i}" for i in range(d)], "count"],
                ((c.hex(), *rep, n) for c, rep, n in
                 zip(census.codes, census.representatives, census.counts)))
    elif args.action == "verify":
        rep = orc.verify_regions(net, span, census, args.tolerance)
        run.csv("verify.csv", ["regions", "samples", "max_relative_error", "violations"],
                [(rep.regions_checked, rep.samples_checked, rep.max_relative_error,
                  len(rep.violations))])
    else:
        g = orc.adjacency_graph(census)
        run.csv("adjacency.csv", ["code_a", "code_b", "hamming", "contacts"],
                ((census.codes[a].hex(), census.codes[b].hex(), e["hamming"], e["contacts"])
                 for a, b, e in sorted(g.edges(data=True))))
    run.close()


def _column(path, name) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and name not in rows[0]:
        raise InvalidInputError(f"{path}: no column {name!r}")
    return np.array([float(r[name]) for r in rows if r[name] != ""])


def cmd_stats(args, argv):
    if args.action == "welch":
        a, b = _column(args.csv, args.a), _column(args.csv, args.b)
        w = st.welch_t(a, b)
        header, row = ["t", "dof", "p"], (w.t, w.dof, w.p_two_sided)
    else:
        x = _column(args.csv, args.a)
        ci = st.bootstrap_ci(x, args.statistic, args.level, args.resamples, args.seed)
        header, row = ["point", "low", "high", "level", "n_resamples"], (
            ci.point_estimate, ci.low, ci.high, ci.level, ci.n_resamples)
    print(",".join(header))
    print(",".join(fmt(v) for v in row))
    if args.out:
        run = Run(args, argv, [args.csv])
        run.csv(f"{args.action}.csv", header, [row])
        run.close()


def cmd_repro(args, argv):
    run = Run(args, argv)
    setup = ex.toy_setup(args.seed)
    save_dataset(setup.data, run.path("data.csv"))
    save_network(setup.trained, run.path("trained.json"))
    save_network(setup.untrained, run.path("untrained.json"))
    run.csv("loss.csv", ["epoch", "loss"], enumerate(setup.loss_history))

    p2 = ex.prediction2(setup)
    run.csv("prediction2.csv",
            ["network", "intra_mean", "inter_mean", "normalization_constant", "t", "dof", "p"],
            [(name, r.intra_mean, r.inter_mean, r.normalization_constant, w.t, w.dof, w.p_two_sided)
             for name, r, w in (("trained", p2.trained, p2.trained_test),
                                ("untrained", p2.untrained, p2.untrained_test))])
    run.csv("layer_gap.csv", ["network", "layer", "intra_mean", "inter_mean", "gap"],
            [(name, g.layer, g.report.intra_mean, g.report.inter_mean, g.gap)
             for name, gaps in (("trained", p2.trained_gaps), ("untrained", p2.untrained_gaps))
             for g in gaps])

    p3 = ex.prediction3(setup, n_inputs=args.sweep_inputs)
    rows = []
    for name, sweeps in (("trained", p3.trained), ("untrained", p3.untrained), ("noise", p3.noise)):
        for k, s in enumerate(sweeps):
            rows.extend((name, k, *r) for r in _sweep_rows("", s))
    header = ["network", "direction", "tag", "alpha", "local_density", "predicted_class"]
    run.csv("sweeps.csv", header + [f"logit{c}" for c in range(setup.trained.output_dim)], rows)

    p1 = ex.prediction1(setup)
    run.csv("clusters.csv", ["index", "class", "activation_cluster", "code_cluster"],
            zip(range(len(setup.data)), setup.data.labels, p1.activation_labels.labels,
                p1.code_labels.labels))

    slice_setup = ex.toy_setup(args.seed, ex.SLICE_SIZES)
    sr = ex.slice_experiment(slice_setup, resolution=args.res)
    sl.export_image(sr.smoothed, run.path("slice.pgm"), "log1p")

    checks = [
        ("prediction2_trained_intra_lt_inter", p2.trained_effect),
        ("prediction2_untrained_not_significant", p2.untrained_null),
        ("layer_gap_last_gt_first", p2.layer_trend),
        ("prediction3_peak_inside_0_1_ge_70pct", p3.trained_peak_fraction >= 0.7),
        ("prediction3_noise_peak_inside_0_1_ge_70pct", p3.noise_peak_fraction >= 0.7),
        ("prediction3_untrained_ratio_lower_majority", p3.ratio_fraction > 0.5),
        ("prediction1_code_vs_activation_agreement", p1.agreement > p1.shuffled_agreement),
        ("prediction1_purity_beats_shuffled", p1.purity > p1.shuffled_purity),
        ("slice_central_region_denser", sr.central_denser),
        ("slice_mass_preserved", sr.mass_error < 1e-6),
    ]
    run.csv("summary.csv", ["check", "passed"], checks)
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    run.close()


# ------------------------------------------------------------------ parser


def _add_span(p):
    p.add_argument("--span", nargs=2, type=int, metavar=("L", "K"), required=True,
                   help="layers L..L+K contribute code bits")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polytope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polytope {__version__}")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="seeded Gaussian blobs")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--center-box", type=float, default=10.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a ReLU MLP with minibatch SGD")
    p.add_argument("--data", required=True)
    p.add_argument("--sizes", default="2,16,16,16,3")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("code", help="print the spline code of one input")
    p.add_argument("--net", required=True)
    p.add_argument("--input", required=True, help="comma-separated vector")
    _add_span(p)
    p.add_argument("--space", choices=["input", "span"], default="input",
                   help="whether --input is a network input or already in the span's input space")
    p.add_argument("--temperature", type=float, default=None, help="also print a soft code")
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("density", help="intra/inter-class density report")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    _add_span(p)
    p.add_argument("--max-pairs", type=int, default=dn.DEFAULT_MAX_PAIRS)
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("layer-gap", help="inter - intra density per span start")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--max-pairs", type=int, default=dn.DEFAULT_MAX_PAIRS)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_layer_gap)

    p = sub.add_parser("interpolate", help="density along interpolation paths")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    _add_span(p)
    p.add_argument("--mode", choices=["linear", "spherical"], default="spherical")
    p.add_argument("--n", type=int, default=dn.DEFAULT_PATH_POINTS)
    p.add_argument("--paths", type=int, default=10)
    p.add_argument("--samples", type=int, default=dn.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("sweep", help="scale hidden activations and probe density")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--layer", type=int, default=1)
    p.add_argument("--alphas", default="0:4:41", help="lo:hi:n or a comma list")
    p.add_argument("--inputs", type=int, default=20)
    p.add_argument("--noise", action="store_true", help="use Gaussian directions instead of inputs")
    p.add_argument("--radius", default="relative", help="relative | anchor | a number")
    p.add_argument("--samples", type=int, default=dn.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("slice", help="boundary heatmap on a plane through three anchors")
    p.add_argument("--net", required=True)
    p.add_argument("--anchors", required=True, help="CSV with a header and three rows")
    p.add_argument("--anchor-space", choices=["input", "span"], default="input")
    _add_span(p)
    p.add_argument("--res", type=int, default=sl.DEFAULT_RESOLUTION)
    p.add_argument("--sigma", type=float, default=sl.DEFAULT_SIGMA)
    p.add_argument("--scale", choices=["linear", "log1p"], default="log1p")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("cluster", help="DBSCAN on activations or codes")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--layer", type=int, default=1)
    p.add_argument("--metric", choices=["euclidean", "hamming"], default="euclidean")
    p.add_argument("--eps", type=float, default=None, help="default: half the median distance")
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("nmf", help="NMF of hidden activations")
    p.add_argument("--net", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--layer", type=int, default=1)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--shift", action="store_true", help="shift signed activations to be >= 0")
    p.add_argument("--labels", default=None, help="labels.csv from `cluster`; adds cosine histograms")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_nmf)

    p = sub.add_parser("oracle", help="lattice census of a low-dimensional span")
    p.add_argument("action", choices=["enumerate", "verify", "adjacency"])
    p.add_argument("--net", required=True)
    _add_span(p)
    p.add_argument("--bounds", nargs="+", type=float, required=True,
                   help="lo hi per input dimension, e.g. --bounds -3 3 -3 3")
    p.add_argument("--res", type=int, default=256)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stats", help="Welch test or bootstrap CI on CSV columns")
    p.add_argument("action", choices=["welch", "bootstrap"])
    p.add_argument("--csv", required=True)
    p.add_argument("--a", required=True, help="column (first sample)")
    p.add_argument("--b", help="second column for welch")
    p.add_argument("--statistic", choices=["mean", "median"], default="mean")
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("repro", help="run the seeded Prediction 1-3 pipeline end to end")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sweep-inputs", type=int, default=ex.SWEEP_INPUTS)
    p.add_argument("--res", type=int, default=sl.DEFAULT_RESOLUTION)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "stats" and args.action == "welch" and not args.b:
        parser.error("stats welch needs --b")
    try:
        set_threads(args.threads)
        args.func(args, argv)
    except (InvalidInputError, FileNotFoundError) as exc:
        print(f"polytope: error: {exc}", file=sys.stderr)
        return 2
    except (PolytopeError, ArithmeticError, OSError) as exc:
        print(f"polytope: {exc}", file=sys.stderr)
        return 1
    finally:
        set_threads(1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
