"""Command-line harness: simulation, training, evaluation, comparison sweeps,
bound tables and diagnostic grids.

Subcommands: simulate, train, evaluate, compare, bounds, grid, weights.
Exit codes: 0 on success, 2 on configuration errors, 3 on numeric failures.

All CSV output is RFC-4180 with a header row, '.' decimals, UTF-8 and LF line
endings; rows are written in a canonical sorted order so that identical
configurations produce byte-identical files regardless of thread count.
"""

import argparse
import concurrent.futures
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from .estimator import (Hypothesis, NoEffectiveSamplesError,
                        empirical_marginal_risk, history_weights,
                        read_sequence, write_sequence)
from .kernels import KernelSpec, StratifiedKernelSpec
from .learners import (DegenerateDesignError, TrainConfig, ecrm_fit, erm_fit,
                       sliding_window_fit)
from .processes import (HiddenMarkovSpec, InconsistentObservationError,
                        NotMixingError, conditional_risk_oracle,
                        forward_posterior, random_chain, simulate)

KERNEL_FAMILIES = ("sqexp", "epanechnikov", "stratified-set")
LEARNERS = ("ecrm", "erm", "sliding-window")

_NUMERIC_ERRORS = (NoEffectiveSamplesError, DegenerateDesignError,
                   NotMixingError, InconsistentObservationError,
                   bounds_mod.VacuousRegimeError, FloatingPointError)


class ConfigError(ValueError):
    pass


def _fmt(value):
    """Shortest round-trip decimal representation for CSV cells."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def make_kernel(family, d, k, bandwidth):
    if family == "stratified-set":
        return StratifiedKernelSpec(d=d, base_width=bandwidth)
    if family in ("sqexp", "epanechnikov"):
        return KernelSpec(dim=k * d, bandwidth_b=bandwidth, family=family)
    raise ConfigError(f"unknown kernel family {family!r}")


@dataclass
class ExperimentConfig:
    """Protocol for a comparison sweep over chains, histories and bandwidths."""

    chain_seeds: list
    n_train: int
    d_list: list
    bandwidths: list
    kernel_family: str = "stratified-set"
    learners: list = field(default_factory=lambda: list(LEARNERS))
    oracle_resolution: int = 512
    master_seed: int = 0
    ridge: float = 1e-8
    record_timing: bool = False
    process_spec_path: str | None = None
    out: str | None = None

    def __post_init__(self):
        if not self.learners:
            raise ConfigError("learner list must be non-empty")
        for lrn in self.learners:
            if lrn not in LEARNERS:
                raise ConfigError(f"unknown learner {lrn!r}")
        if self.kernel_family not in KERNEL_FAMILIES:
            raise ConfigError(f"unknown kernel family {self.kernel_family!r}")
        if self.n_train < 2 or not self.d_list or not self.bandwidths:
            raise ConfigError("n_train, d list and bandwidth list must be positive")
        if any(d < 1 for d in self.d_list) or any(b <= 0 for b in self.bandwidths):
            raise ConfigError("all d and bandwidths must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


COMPARE_COLUMNS = ("seed", "d", "bandwidth", "learner", "conditional_risk",
                   "marginal_risk", "wall_time_ms", "error")


def _compare_one_chain(cfg, chain_seed):
    if cfg.process_spec_path is not None:
        spec = HiddenMarkovSpec.load(cfg.process_spec_path)
    else:
        spec = random_chain(chain_seed)
    sim_seed = cfg.master_seed * 1_000_003 + chain_seed
    seq = simulate(spec, cfg.n_train, sim_seed)
    posterior = forward_posterior(spec, seq)

    rows = []
    for d in cfg.d_list:
        target = seq.points[-d:]
        for b in cfg.bandwidths:
            for learner in cfg.learners:
                row = {"seed": chain_seed, "d": d, "bandwidth": float(b),
                       "learner": learner, "conditional_risk": "",
                       "marginal_risk": "", "wall_time_ms": 0, "error": ""}
                t0 = time.perf_counter()
                try:
                    if learner == "ecrm":
                        kern = make_kernel(cfg.kernel_family, d, seq.dim, b)
                        tc = TrainConfig(d=d, kernel=kern, ridge=cfg.ridge)
                        h = ecrm_fit(seq, target, tc)
                    elif learner == "erm":
                        h = erm_fit(seq, ridge=cfg.ridge)
                    else:
                        h = sliding_window_fit(seq, d, ridge=cfg.ridge)
                    h01 = Hypothesis(h.weights, h.bias, "zero-one")
                    risk = conditional_risk_oracle(
                        spec, posterior, h01, resolution=cfg.oracle_resolution)
                    row["conditional_risk"] = risk
                    row["marginal_risk"] = empirical_marginal_risk(seq, h01)
                except _NUMERIC_ERRORS + (ValueError,) as exc:
                    row["error"] = f"{type(exc).__name__}: {exc}"
                if cfg.record_timing:
                    row["wall_time_ms"] = (time.perf_counter() - t0) * 1000.0
                rows.append(row)
    return rows


def run_comparison(cfg, threads=1):
    """One row per (chain seed, d, bandwidth, learner); errors are data."""
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda s: _compare_one_chain(cfg, s),
                                   cfg.chain_seeds))
    else:
        chunks = [_compare_one_chain(cfg, s) for s in cfg.chain_seeds]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["seed"], r["d"], r["bandwidth"], r["learner"]))
    return rows


def write_csv(path, columns, rows):
    out = open(path, "w", encoding="utf-8", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    finally:
        if path:
            out.close()


def emit_distribution_grid(spec, history, resolution):
    """Grid of E[y | x, history] over the emission box: the posterior-weighted
    mixture of per-state labels. Returns (columns, rows)."""
    posterior = forward_posterior(spec, history,
                                  initial=spec.stationary_distribution())
    lo, hi = spec.emission_box[:, 0], spec.emission_box[:, 1]
    g1 = lo[0] + (np.arange(resolution) + 0.5) * (hi[0] - lo[0]) / resolution
    g2 = lo[1] + (np.arange(resolution) + 0.5) * (hi[1] - lo[1]) / resolution
    xx, yy = np.meshgrid(g1, g2, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    ey = np.zeros(pts.shape[0])
    for s in range(spec.num_states):
        ey += posterior.probs[s] * spec.labels_at(s, pts)
    ey = np.clip(ey, -1.0, 1.0)  # guard against posterior rounding
    rows = [{"x1": float(p[0]), "x2": float(p[1]), "e_y": float(v)}
            for p, v in zip(pts, ey)]
    return ("x1", "x2", "e_y"), rows


def emit_weight_trace(seq, d, kernel):
    """Per-sample kernel weights against the final d-history, for scatter
    plots of each point's contribution to the risk estimate."""
    target = seq.points[-d:]
    wv = history_weights(seq, d, kernel, target)
    cols = ["index"] + [f"x{j + 1}" for j in range(seq.dim - 1)] + ["y", "weight"]
    rows = []
    for j, i in enumerate(wv.index_set):
        z = seq.points[i]  # the weighted sample z_{i+1}
        row = {"index": int(i + 1), "y": float(2.0 * z[-1] - 1.0),
               "weight": float(wv.raw_weights[j])}
        for c in range(seq.dim - 1):
            row[f"x{c + 1}"] = float(z[c])
        rows.append(row)
    return tuple(cols), rows


def _beta_from_config(cfg):
    kind = cfg.get("type", "zero")
    if kind == "zero":
        return lambda j: 0.0
    if kind == "exponential":
        c1 = float(cfg.get("c1", 1.0))
        c2 = float(cfg.get("c2", 1.0))
        return lambda j: c1 * math.exp(-c2 * j)
    raise ConfigError(f"unknown beta config type {kind!r}")


def _covering_from_config(cfg):
    kind = cfg.get("type", "linear")
    if kind == "constant":
        value = float(cfg.get("value", 1.0))
        return lambda theta, n: value
    if kind == "linear":
        radius = float(cfg.get("weight_radius", 1.0))
        dim = int(cfg.get("input_dim", 2))
        return lambda theta, n: bounds_mod.linear_covering_bound(
            theta, radius, dim, n)
    raise ConfigError(f"unknown covering config type {kind!r}")


def _bound_params_from_json(doc):
    required = ("t", "N", "k", "d", "b", "K1", "K2", "L", "gamma",
                "D0", "D2", "L_H")
    missing = [key for key in required if key not in doc]
    if missing:
        raise ConfigError(f"bound params missing keys: {missing}")
    beta = _beta_from_config(doc.get("beta", {"type": "zero"}))
    covering = _covering_from_config(doc.get("covering", {"type": "linear"}))
    if "mu" in doc and "a" in doc:
        mu, a = int(doc["mu"]), int(doc["a"])
    else:
        mu, a = bounds_mod.block_schedule(int(doc["N"]), int(doc["d"]),
                                          target_mu=doc.get("target_mu"))
    return bounds_mod.BoundParams(
        t=float(doc["t"]), N=int(doc["N"]), k=int(doc["k"]), d=int(doc["d"]),
        b=float(doc["b"]), K1=float(doc["K1"]), K2=float(doc["K2"]),
        L=float(doc["L"]), gamma=float(doc["gamma"]), D0=float(doc["D0"]),
        D2=float(doc["D2"]), L_H=float(doc["L_H"]), beta=beta,
        covering=covering, mu=mu, a=a, D1=doc.get("D1"))


def _load_spec_arg(args):
    if getattr(args, "process_spec", None):
        return HiddenMarkovSpec.load(args.process_spec)
    if getattr(args, "chain_seed", None) is not None:
        return random_chain(args.chain_seed)
    raise ConfigError("provide --process-spec or --chain-seed")


def _cmd_simulate(args):
    spec = _load_spec_arg(args)
    seq = simulate(spec, args.n, args.seed)
    write_sequence(seq, args.out)
    if args.save_spec:
        spec.save(args.save_spec)
    return 0


def _cmd_train(args):
    seq = read_sequence(args.data)
    if args.learner == "ecrm":
        kern = make_kernel(args.kernel, args.d, seq.dim, args.bandwidth)
        tc = TrainConfig(d=args.d, kernel=kern, ridge=args.ridge,
                         fallback=args.fallback)
        h = ecrm_fit(seq, seq.points[-args.d:], tc)
    elif args.learner == "erm":
        h = erm_fit(seq, ridge=args.ridge)
    else:
        h = sliding_window_fit(seq, args.d, ridge=args.ridge)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(h.to_dict(), fh, indent=2)
        fh.write("\n")
    return 0


def _cmd_evaluate(args):
    seq = read_sequence(args.data)
    with open(args.hypothesis, "r", encoding="utf-8") as fh:
        h = Hypothesis.from_dict(json.load(fh))
    result = {"marginal_risk": empirical_marginal_risk(seq, h)}
    if args.process_spec:
        spec = HiddenMarkovSpec.load(args.process_spec)
        posterior = forward_posterior(spec, seq)
        result["conditional_risk"] = conditional_risk_oracle(
            spec, posterior, h, resolution=args.oracle_resolution)
    text = json.dumps(result, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_compare(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.seed is not None:
        doc["master_seed"] = args.seed
    cfg = ExperimentConfig.from_dict(doc)
    out = args.out or cfg.out
    rows = run_comparison(cfg, threads=args.threads)
    write_csv(out, COMPARE_COLUMNS, rows)
    if out:
        sidecar = out + ".config.json"
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


BOUND_COLUMNS = ("N", "b", "mu", "a", "t1", "t2", "t3", "covering",
                 "term1", "term2", "total", "error")


def _cmd_bounds(args):
    with open(args.params, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    rows = []
    if args.scaling_grid:
        grid = [int(v) for v in args.scaling_grid.split(",")]
        template = _bound_params_from_json({**doc, "mu": 1, "a": 1,
                                            "N": max(4 * int(doc["d"]), int(doc["N"]))})
        for res in bounds_mod.scaling_check(grid, int(doc["d"]), template):
            row = {c: "" for c in BOUND_COLUMNS}
            row.update({"N": res.N, "b": res.b, "mu": res.mu, "a": res.a})
            if res.error:
                row["error"] = res.error
            else:
                p = bounds_mod.BoundParams(
                    t=template.t, N=res.N, k=template.k, d=template.d,
                    b=res.b, K1=template.K1, K2=template.K2, L=template.L,
                    gamma=template.gamma, D0=template.D0, D2=template.D2,
                    L_H=template.L_H, beta=template.beta,
                    covering=template.covering, mu=res.mu, a=res.a)
                row.update(bounds_mod.concentration_terms(p))
            rows.append(row)
    else:
        p = _bound_params_from_json(doc)
        row = {c: "" for c in BOUND_COLUMNS}
        row.update({"N": p.N, "b": p.b, "mu": p.mu, "a": p.a})
        row.update(bounds_mod.concentration_terms(p))
        rows.append(row)
    write_csv(args.out, BOUND_COLUMNS, rows)
    return 0


def _cmd_grid(args):
    spec = HiddenMarkovSpec.load(args.process_spec)
    seq = read_sequence(args.data)
    history = seq.points[-args.d:]
    cols, rows = emit_distribution_grid(spec, history, args.resolution)
    write_csv(args.out, cols, rows)
    return 0


def _cmd_weights(args):
    seq = read_sequence(args.data)
    kern = make_kernel(args.kernel, args.d, seq.dim, args.bandwidth)
    cols, rows = emit_weight_trace(seq, args.d, kern)
    write_csv(args.out, cols, rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="crm",
        description="Conditional risk minimization for dependent processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a sample sequence")
    p.add_argument("--process-spec")
    p.add_argument("--chain-seed", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--save-spec")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train", help="fit a predictor on a sequence file")
    p.add_argument("--data", required=True)
    p.add_argument("--learner", choices=LEARNERS, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--bandwidth", type=float, default=0.2)
    p.add_argument("--kernel", choices=KERNEL_FAMILIES, default="sqexp")
    p.add_argument("--ridge", type=float, default=1e-8)
    p.add_argument("--fallback", choices=("error", "uniform-weights"),
                   default="error")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a stored hypothesis")
    p.add_argument("--data", required=True)
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--process-spec")
    p.add_argument("--oracle-resolution", type=int, default=512)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="run the learner comparison sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config master seed")
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("bounds", help="evaluate the concentration bound")
    p.add_argument("--params", required=True)
    p.add_argument("--scaling-grid",
                   help="comma-separated N values for the mixing-rate schedule")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("grid", help="conditional label-expectation grid")
    p.add_argument("--process-spec", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("weights", help="per-sample weight trace")
    p.add_argument("--data", required=True)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--kernel", choices=KERNEL_FAMILIES, default="stratified-set")
    p.add_argument("--bandwidth", type=float, default=0.2)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_weights)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        print(f"crm: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"crm: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
