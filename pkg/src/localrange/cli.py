"""Command-line front end: scaling runs, layer sweeps, moment checks, bounds."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .harness import ConfigError, ExperimentConfig
from .haar import (
    MomentQuery,
    average_reduced_purity,
    mc_reduced_purity,
    mc_second_moment,
    second_moment_contracted,
    second_moment_reduced_norm,
)
from .landscape import (
    bound_report,
    task_tight_bound,
    transfer_tensor,
    variation_range_adam,
    variation_range_exact_m1,
    variation_range_grid,
)
from .linalg import BipartitePartition, random_density, random_hermitian

DEFAULT_LAYER_LIST = "5,20,50,80,95"

CONFIG_FIELDS = (
    "task", "n_min", "n_max", "m", "ensemble_config", "design_kind",
    "layers", "layers_multiplier", "samples", "seed", "optimizer",
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; we reserve 2 for selftest."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="FILE", help="flat JSON file with config fields")
    p.add_argument("--task", choices=("vqe", "qae", "qsl"))
    p.add_argument("--n", type=int, dest="n_min", help="smallest qubit count")
    p.add_argument("--n-max", type=int, dest="n_max", help="largest qubit count (default: --n)")
    p.add_argument("--m", type=int, help="local-gate subsystem size (1 or 2)")
    p.add_argument("--ensemble-config", dest="ensemble_config",
                   choices=("v1_design", "v2_design", "both"))
    p.add_argument("--design-kind", dest="design_kind",
                   choices=("two_design", "one_design", "identity"))
    p.add_argument("--layers", type=int, help="fixed layer count (default: 10n)")
    p.add_argument("--layers-multiplier", type=int, dest="layers_multiplier")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--optimizer", choices=("exact", "adam", "grid"))
    p.add_argument("--out", metavar="FILE", help="CSV output path (default: stdout)")


def _load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config: expected a flat JSON object")
    unknown = sorted(set(data) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"config: unknown keys {unknown}")
    return data


def _build_config(args) -> ExperimentConfig:
    merged = _load_config_file(args.config) if args.config else {}
    for name in CONFIG_FIELDS:
        val = getattr(args, name, None)
        if val is not None:
            merged[name] = val
    if "task" not in merged:
        raise ConfigError("task: required (use --task or the config file)")
    if "n_min" not in merged:
        raise ConfigError("n_min: required (use --n or the config file)")
    merged.setdefault("n_max", merged["n_min"])
    return ExperimentConfig(**merged)


def _write_rows(rows, out):
    if out:
        harness.emit_csv(rows, out)
    else:
        print(harness.CSV_HEADER)
        for r in rows:
            print(",".join(harness._fmt(v) for v in (
                r.task, r.n, r.m, r.ensemble_config, r.samples,
                r.mean_delta_over_w, r.std_delta, r.bound_general,
                r.bound_tight, r.bound_qsl, r.seed,
            )))


def _cmd_scaling(args) -> int:
    cfg = _build_config(args)
    _write_rows(harness.run_scaling(cfg), args.out)
    return 0


def _cmd_layers(args) -> int:
    cfg = _build_config(args)
    try:
        layer_list = [int(x) for x in args.layer_list.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"layer-list: expected comma-separated integers, got {args.layer_list!r}")
    keyed = harness.run_layer_sweep(cfg, layer_list)
    rows = [keyed[key] for key in sorted(keyed)]
    for (layers, _n), row in sorted(keyed.items()):
        print(f"# layers={layers} n={row.n} mean_delta_over_w={row.mean_delta_over_w:.6e}")
    _write_rows(rows, args.out)
    return 0


def _check(label: str, ok: bool, detail: str = "") -> bool:
    status = "pass" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{status}] {label}{suffix}")
    return ok


def _cmd_validate_haar(args) -> int:
    rng = np.random.default_rng(args.seed)
    all_ok = True
    for n, m in ((3, 1), (4, 1), (4, 2)):
        part = BipartitePartition(n, tuple(range(m)))
        p = random_density(part.d, rng)
        q = random_hermitian(part.d, rng)
        mq = MomentQuery(p, q, part)
        closed = second_moment_reduced_norm(mq)
        contracted = second_moment_contracted(mq)
        all_ok &= _check(
            f"two evaluation paths agree (n={n}, m={m})",
            abs(closed - contracted) <= 1e-12 * max(1.0, abs(closed)),
            f"closed={closed:.12e} contracted={contracted:.12e}",
        )
        est = mc_second_moment(mq, samples=args.samples, seed=args.seed + n * 10 + m)
        all_ok &= _check(
            f"Monte Carlo within 3 stderr (n={n}, m={m})",
            abs(est.mean - closed) <= 3 * est.stderr + 1e-12,
            f"closed={closed:.6e} mc={est.mean:.6e} stderr={est.stderr:.2e}",
        )
        purity = average_reduced_purity(p, part)
        pest = mc_reduced_purity(p, part, samples=args.samples, seed=args.seed + 7 * n + m)
        all_ok &= _check(
            f"average reduced purity within 3 stderr (n={n}, m={m})",
            abs(pest.mean - purity) <= 3 * pest.stderr + 1e-12,
            f"closed={purity:.6e} mc={pest.mean:.6e}",
        )
    return 0 if all_ok else 1


def _cmd_bounds(args) -> int:
    if args.m >= args.n:
        raise ConfigError(f"m: must be smaller than n, got m={args.m}, n={args.n}")
    inst = harness._setup_task(args.task, args.n, args.m)
    rep = bound_report(inst.h, inst.part, inst.w, qsl=(args.task == "qsl"))
    print(f"task = {args.task}, n = {args.n}, m = {args.m}, w = {inst.w:.12g}")
    print(f"bound_general = {rep.general:.12g}")
    print(f"bound_variance = {rep.variance:.12g}")
    print(f"bound_tight = {rep.tight:.12g}")
    if args.task in ("vqe", "qae"):
        print(f"bound_tight_published = {task_tight_bound(args.task, args.n, inst.w):.12g}")
    if rep.qsl is not None:
        print(f"bound_qsl = {rep.qsl:.12g}")
    print(f"N_A = {rep.n_a}")
    print(f"N_AB = {rep.n_ab}")
    for eps, tail in sorted(rep.markov.items(), reverse=True):
        print(f"markov_tail(eps={eps:g}) = {tail:.12g}")
    return 0


def _cmd_selftest(args) -> int:
    rng = np.random.default_rng(args.seed)
    ok = True

    part = BipartitePartition(3, (0,))
    p = random_density(part.d, rng)
    q = random_hermitian(part.d, rng)
    mq = MomentQuery(p, q, part)
    closed, contracted = second_moment_reduced_norm(mq), second_moment_contracted(mq)
    ok &= _check("moment identity, independent paths", abs(closed - contracted) <= 1e-12)

    for trial in range(3):
        pt = BipartitePartition(4, (0,))
        h = random_hermitian(pt.d, rng)
        rho = random_density(pt.d, rng)
        t = transfer_tensor(h, rho, None, None, pt)
        exact = variation_range_exact_m1(t)
        grid = variation_range_grid(t, resolution=32)
        adam = variation_range_adam(t)
        ok &= _check(
            f"optimizer agreement, instance {trial}",
            abs(exact.delta - grid.delta) <= 0.05 * max(1.0, exact.delta)
            and abs(exact.delta - adam.delta) <= 1e-3 * max(1.0, exact.delta),
            f"exact={exact.delta:.6f} grid={grid.delta:.6f} adam={adam.delta:.6f}",
        )

    cfg = ExperimentConfig(task="qsl", n_min=2, n_max=2, ensemble_config="both",
                           design_kind="identity", samples=4, seed=args.seed)
    row = harness.run_scaling(cfg)[0]
    ok &= _check("state-learning range is 1 with identity surroundings",
                 abs(row.mean_delta_over_w - 1.0) <= 1e-9,
                 f"mean={row.mean_delta_over_w:.12f}")

    cfg = ExperimentConfig(task="vqe", n_min=2, n_max=4, ensemble_config="both",
                           design_kind="two_design", samples=4, seed=args.seed)
    rows = harness.run_scaling(cfg)
    ok &= _check("variation range below its bound on a small sweep",
                 all(r.mean_delta_over_w * 1.0 <= r.bound_general for r in rows))

    cfg2 = ExperimentConfig(task="vqe", n_min=2, n_max=2, ensemble_config="both",
                            design_kind="two_design", samples=4, seed=args.seed)
    a = harness.run_scaling(cfg2)[0]
    b = harness.run_scaling(cfg2)[0]
    ok &= _check("deterministic reproduction under a fixed seed", a == b)

    return 0 if ok else 2


def cli_main(argv=None) -> int:
    parser = _Parser(prog="localrange",
                     description="Variation range of variational costs under one local gate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scaling = sub.add_parser("scaling", parents=[], help="qubit-count scaling run")
    _add_config_flags(p_scaling)
    p_scaling.set_defaults(func=_cmd_scaling)

    p_layers = sub.add_parser("layers", help="layer-count sweep")
    _add_config_flags(p_layers)
    p_layers.add_argument("--layer-list", default=DEFAULT_LAYER_LIST,
                          help="comma-separated layer counts")
    p_layers.set_defaults(func=_cmd_layers)

    p_haar = sub.add_parser("validate-haar", help="check moment identities against sampling")
    p_haar.add_argument("--samples", type=int, default=2000)
    p_haar.add_argument("--seed", type=int, default=0)
    p_haar.set_defaults(func=_cmd_validate_haar)

    p_bounds = sub.add_parser("bounds", help="print every bound for a task instance")
    p_bounds.add_argument("--task", choices=("vqe", "qae", "qsl"), required=True)
    p_bounds.add_argument("--n", type=int, required=True)
    p_bounds.add_argument("--m", type=int, default=1)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_self = sub.add_parser("selftest", help="reduced-scale acceptance checks")
    p_self.add_argument("--seed", type=int, default=0)
    p_self.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"localrange: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"localrange: error: {exc}", file=sys.stderr)
        return 1


def entry():
    raise SystemExit(cli_main())
