"""Command-line interface.

Every command writes its outputs plus a run manifest (``*.manifest.json``)
recording the command, resolved parameters, seed, input hashes, package
version and wall-clock time.  Outputs other than the manifest are
byte-identical when a command is rerun with the same inputs, seed and
thread count.

``netcox <argv from a manifest>`` replays a run.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 I/O
failure.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import IsotropicCovariance, require_valid, validate_for_network
from .cox import CoxModel, CoxSimulator
from .exceptions import InputOutputError, InvalidParameters, NetcoxError
from .gp_sim import simulate_gp
from .inference import (
    ContrastConfig,
    FitResult,
    default_grid,
    estimate_intensity,
    estimate_K,
    estimate_pcf,
    fit_pattern,
)
from .io import (
    dumps,
    ensure_dir,
    file_sha256,
    read_json,
    read_network,
    read_pairs,
    read_pattern,
    write_curve,
    write_json,
    write_pattern,
    write_table,
)
from .metrics import make_metric
from .network import classify_topology, is_one_sum_of_trees_and_loops, make_grid
from .rng import stream
from .summaries import empirical_FGJ, envelope_pipeline, plot_envelope


class _Run:
    """Collects inputs and outputs of one invocation for the manifest."""

    def __init__(self, command, args, argv):
        self.command = command
        self.args = args
        self.argv = list(argv)
        self.resolved = {}
        self.inputs = {}
        self.outputs = []
        self.t0 = time.perf_counter()

    def input(self, path):
        self.inputs[str(path)] = file_sha256(path)
        return path

    def output(self, path):
        self.outputs.append(str(path))
        return path

    def write_manifest(self, path):
        params = {k: v for k, v in vars(self.args).items() if k not in ("func",)}
        params.update(self.resolved)
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "parameters": params,
            "seed": params.get("seed"),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "version": __version__,
            "wall_clock_seconds": time.perf_counter() - self.t0,
        }
        write_json(path, manifest)


def _manifest_path(out) -> Path:
    out = Path(out)
    if out.suffix:
        return out.with_name(out.stem + ".manifest.json")
    return out / "manifest.json"


def _parse_fix(items):
    fixed = {}
    for it in items or []:
        if "=" not in it:
            raise InvalidParameters(f"--fix expects name=value, got {it!r}")
        k, v = it.split("=", 1)
        try:
            fixed[k.strip()] = float(v)
        except ValueError:
            raise InvalidParameters(f"--fix {k}: {v!r} is not a number") from None
    return fixed


# -- commands -------------------------------------------------------------------

def cmd_validate(args, run):
    net = read_network(run.input(args.net))
    topo = classify_topology(net)
    one_sum = is_one_sum_of_trees_and_loops(net)
    rs = make_metric(net, "resistance")
    delta = rs.delta_matrix
    nnz = int(np.count_nonzero(delta)) if isinstance(delta, np.ndarray) else int(delta.nnz)
    geo_ok = validate_for_network(
        IsotropicCovariance(1.0, _exp_family(), "geodesic"), net)
    if topo == "tree":
        summary = "tree; geodesic = resistance"
    else:
        summary = f"{topo}; {'1-sum of trees and loops' if one_sum else 'NOT 1-sum'}; " \
                  f"geodesic covariances {'accepted' if geo_ok else 'rejected'}"
    report = {
        "summary": summary,
        "topology": topo,
        "one_sum_of_trees_and_loops": one_sum,
        "total_length": net.total_length,
        "n_vertices": net.n_vertices,
        "n_segments": net.n_segments,
        "delta_nonzero_fraction": nnz / float(net.n_vertices) ** 2,
        "geodesic_covariances": "accepted" if geo_ok else "rejected",
        "geodesic_reason": geo_ok.reason,
    }
    print(summary)
    if args.out:
        write_json(run.output(args.out), report)
    return args.out


def _exp_family():
    from .covariance import PoweredExponential

    return PoweredExponential(1.0)


def cmd_metric(args, run):
    net = read_network(run.input(args.net))
    eng = make_metric(net, args.metric)
    if args.pairs:
        P = read_pairs(run.input(args.pairs))
        s1, o1 = net.check_points(P[:, 0].astype(np.int64), P[:, 1])
        s2, o2 = net.check_points(P[:, 2].astype(np.int64), P[:, 3])
        d = np.array([eng.cross(s1[k:k + 1], o1[k:k + 1], s2[k:k + 1], o2[k:k + 1])[0, 0]
                      for k in range(s1.size)])
        rows = [(int(a), float(b), int(c), float(e), float(x))
                for a, b, c, e, x in zip(s1, o1, s2, o2, d)]
        write_table(run.output(args.out), ["seg1", "off1", "seg2", "off2", "distance"], rows)
    elif args.matrix:
        pts = read_pattern(run.input(args.matrix), net)
        D = eng.pairwise(pts.segments, pts.offsets)
        write_table(run.output(args.out), [f"p{k}" for k in range(pts.n)], D.tolist())
    else:
        raise InvalidParameters("metric needs --pairs or --matrix")
    return args.out


def cmd_sim_gp(args, run):
    net = read_network(run.input(args.net))
    cov = IsotropicCovariance.from_dict(read_json(run.input(args.cov)))
    require_valid(cov, net)
    grid = make_grid(net, args.grid_spacing)
    algo = {"eig": "eig", "tree": "tree", "mixture": "mixture", "auto": "auto"}[args.algo]
    rows = []
    for rep in range(args.reps):
        smp = simulate_gp(cov, grid, stream(args.seed, rep), None, algo, args.n_mix)
        for k in range(len(grid)):
            rows.append((rep, int(grid.segments[k]), float(grid.offsets[k]), float(smp.values[k])))
    write_table(run.output(args.out), ["rep", "segment", "offset", "value"], rows)
    return args.out


def cmd_sim_cox(args, run):
    net = read_network(run.input(args.net))
    model = CoxModel.from_dict(read_json(run.input(args.model)))
    require_valid(model.cov, net)
    sim = CoxSimulator(model, make_grid(net, args.grid_spacing))
    out = args.out
    if "{rep}" not in out and args.reps > 1:
        raise InvalidParameters("--out must contain '{rep}' when --reps > 1")
    for rep in range(args.reps):
        x = sim.simulate(stream(args.seed, rep))
        path = out.format(rep=rep)
        ensure_dir(Path(path).parent)
        write_pattern(run.output(path), x)
    return out.format(rep="all")


def cmd_summaries(args, run):
    net = read_network(run.input(args.net))
    pat = read_pattern(run.input(args.pattern), net)
    intensity = estimate_intensity(pat, args.by_mark)
    if args.kind == "pcf":
        t = default_grid(args.a2) if args.a2 else None
        c = estimate_pcf(pat, args.metric, args.bandwidth, t, intensity)
        write_curve(run.output(args.out), c.t, c.values)
    elif args.kind == "K":
        t = default_grid(args.a2) if args.a2 else None
        c = estimate_K(pat, args.metric, t, intensity)
        write_curve(run.output(args.out), c.t, c.values)
    else:
        rmax = args.a2 or 0.1 * net.total_length
        r = np.linspace(0.0, rmax, 129)
        f = empirical_FGJ(pat, args.metric, r, intensity=intensity if args.by_mark else None)
        write_table(run.output(args.out), ["r", "F", "G", "J"], zip(r, f.F, f.G, f.J))
    return args.out


def _fit(args, run, net, pat):
    cfg = ContrastConfig(args.a1, args.a2, args.p, args.q)
    family = args.cov_family
    res, g_hat = fit_pattern(pat, args.model_family, family, cfg, args.metric, args.bandwidth,
                             args.by_mark, fixed=_parse_fix(args.fix), h=args.h, seed=args.seed,
                             mixing=args.mixing)
    out = res.to_dict()
    out["bandwidth"] = g_hat.meta["bandwidth"]
    return res, g_hat, out


def cmd_fit(args, run):
    net = read_network(run.input(args.net))
    pat = read_pattern(run.input(args.pattern), net)
    res, g_hat, out = _fit(args, run, net, pat)
    write_json(run.output(args.out), out)
    if args.curve:
        write_table(run.output(args.curve), ["t", "pcf_hat", "pcf_model"],
                    zip(g_hat.t, g_hat.values, res.model.pcf(g_hat.t)))
    return args.out


def _envelope(args, run, net, pat, model):
    require_valid(model.cov, net)
    spacing = args.grid_spacing or net.total_length / 1000.0
    res = envelope_pipeline(model, pat, args.sims, args.seed, args.metric, spacing)
    return res


def cmd_envelope(args, run):
    net = read_network(run.input(args.net))
    pat = read_pattern(run.input(args.pattern), net)
    fit = read_json(run.input(args.fit))
    model = CoxModel.from_dict(fit.get("model", fit))
    res = _envelope(args, run, net, pat, model)
    write_json(run.output(args.out), res.to_dict())
    if args.plot:
        plot_envelope(res, run.output(args.plot))
    print(f"p = {res.p_value:.4f}")
    return args.out


def cmd_pipeline(args, run):
    cfg = read_json(run.input(args.config))
    base = Path(args.config).parent
    out_dir = ensure_dir(args.out or base / cfg.get("out_dir", "netcox_out"))

    def rel(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    try:
        net_path, pat_path = rel(cfg["net"]), rel(cfg["pattern"])
    except KeyError as exc:
        raise InvalidParameters(f"pipeline config lacks {exc}") from exc
    net = read_network(run.input(net_path))
    pat = read_pattern(run.input(pat_path), net)
    ns = argparse.Namespace(
        a1=float(cfg.get("a1", 0.0)), a2=float(cfg.get("a2", 50.0)), p=float(cfg.get("p", 2.0)),
        q=float(cfg.get("q", 1.0)), model_family=cfg.get("model_family", "lgcp"),
        cov_family=cfg.get("cov_family", "exponential"), mixing=cfg.get("mixing"),
        metric=cfg.get("metric", "resistance"), bandwidth=cfg.get("bandwidth"),
        by_mark=bool(cfg.get("by_mark", False)),
        fix=[f"{k}={v}" for k, v in sorted(cfg.get("fix", {}).items())], h=cfg.get("h"),
        seed=args.seed, sims=int(cfg.get("sims", 199)), grid_spacing=cfg.get("grid_spacing"))
    run.resolved = {k: v for k, v in vars(ns).items() if k != "seed"}
    run.resolved.update(net=str(net_path), pattern=str(pat_path), out_dir=str(out_dir))
    res, g_hat, fit_out = _fit(ns, run, net, pat)
    write_curve(run.output(out_dir / "pcf.csv"), g_hat.t, g_hat.values)
    env = _envelope(ns, run, net, pat, res.model)
    fit_out["p_value"] = env.p_value
    write_json(run.output(out_dir / "fit.json"), fit_out)
    write_json(run.output(out_dir / "envelope.json"), env.to_dict())
    plot_envelope(env, run.output(out_dir / "envelope.svg"))
    print(f"D = {res.D:.6g}, p = {env.p_value:.4f}")
    return out_dir


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netcox", description="Cox point processes on linear networks")
    p.add_argument("--version", action="version", version=f"netcox {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, stochastic=False, help=None):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("--threads", type=int, default=1, help="BLAS threads (default 1)")
        if stochastic:
            sp.add_argument("--seed", type=int, required=True)
        return sp

    sp = add("validate", cmd_validate, help="report network topology and diagnostics")
    sp.add_argument("--net", required=True)
    sp.add_argument("--out")

    sp = add("metric", cmd_metric, help="distances between points")
    sp.add_argument("--net", required=True)
    sp.add_argument("--metric", choices=["geodesic", "resistance"], default="resistance")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--pairs")
    g.add_argument("--matrix")
    sp.add_argument("--out", required=True)

    sp = add("sim-gp", cmd_sim_gp, True, help="simulate Gaussian fields on a grid")
    sp.add_argument("--net", required=True)
    sp.add_argument("--cov", required=True)
    sp.add_argument("--grid-spacing", type=float, required=True)
    sp.add_argument("--algo", choices=["auto", "eig", "tree", "mixture"], default="auto")
    sp.add_argument("--n-mix", type=int, default=200)
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument("--out", required=True)

    sp = add("sim-cox", cmd_sim_cox, True, help="simulate Cox point patterns")
    sp.add_argument("--net", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--grid-spacing", type=float, required=True)
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument("--out", required=True)

    sp = add("summaries", cmd_summaries, help="nonparametric summary curves")
    sp.add_argument("--net", required=True)
    sp.add_argument("--pattern", required=True)
    sp.add_argument("--kind", choices=["pcf", "K", "FGJ"], default="pcf")
    sp.add_argument("--metric", choices=["geodesic", "resistance"], default="resistance")
    sp.add_argument("--bandwidth", type=float)
    sp.add_argument("--a2", type=float)
    sp.add_argument("--by-mark", action="store_true")
    sp.add_argument("--out", required=True)

    def fit_args(sp):
        sp.add_argument("--model-family", choices=["lgcp", "icp", "pcpp"], default="lgcp")
        sp.add_argument("--cov-family", default="exponential")
        sp.add_argument("--mixing", choices=["gamma", "inverse_gamma", "gig", "degenerate"])
        sp.add_argument("--metric", choices=["geodesic", "resistance"], default="resistance")
        sp.add_argument("--a1", type=float, default=0.0)
        sp.add_argument("--a2", type=float, default=50.0)
        sp.add_argument("--p", type=float, default=2.0)
        sp.add_argument("--q", type=float, default=1.0)
        sp.add_argument("--bandwidth", type=float)
        sp.add_argument("--fix", action="append", metavar="NAME=VALUE")
        sp.add_argument("--h", type=int)
        sp.add_argument("--by-mark", action="store_true")

    sp = add("fit", cmd_fit, True, help="minimum-contrast model fit")
    sp.add_argument("--net", required=True)
    sp.add_argument("--pattern", required=True)
    fit_args(sp)
    sp.add_argument("--curve", help="also write the estimated and fitted pcf")
    sp.add_argument("--out", required=True)

    sp = add("envelope", cmd_envelope, True, help="global envelope test of a fitted model")
    sp.add_argument("--net", required=True)
    sp.add_argument("--pattern", required=True)
    sp.add_argument("--fit", required=True)
    sp.add_argument("--sims", type=int, default=999)
    sp.add_argument("--metric", choices=["geodesic", "resistance"], default="resistance")
    sp.add_argument("--grid-spacing", type=float)
    sp.add_argument("--out", required=True)
    sp.add_argument("--plot")

    sp = add("pipeline", cmd_pipeline, True, help="fit and envelope test from a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", help="output directory (overrides the config)")
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    run = _Run(args.command, args, argv)
    try:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=max(1, args.threads)):
            target = args.func(args, run)
        if target is not None:
            run.write_manifest(_manifest_path(target))
    except NetcoxError as exc:
        print(f"netcox {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"netcox {args.command}: I/O error: {exc}", file=sys.stderr)
        return InputOutputError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
