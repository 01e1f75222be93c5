"""Command-line front end: parse config, dispatch subcommands, write CSV artifacts."""

from __future__ import annotations

import argparse
import datetime
import os
import sys

import numpy as np

from d2dsched import analytics, simcore
from d2dsched.channel import GammaSnrCdf
from d2dsched.grouping import build_conflict_graph, fixed_grouping, greedy_coloring
from d2dsched.model import ConfigError, SystemConfig, load_config, sample_spatial
from d2dsched.weights import group_access_prob, solve_group_weights, upi_closed_form

# the standalone four-group scenario: per-user mean SNR and Nakagami shape
TABLE5_MEANS = (100, 60, 70, 5, 16, 40, 20, 2, 4, 40, 36, 80, 7, 40)
TABLE5_SHAPES = (1, 8, 2, 6, 7, 3, 7, 5, 3, 3, 2, 9, 9, 4)
TABLE5_SIZES = (1, 7, 2, 4)

PRESETS = {
    "table2-orthogonal": {
        "desk": {"K1": 10, "K2": 5, "spatial_realizations": 20, "slots_per_realization": 5000,
                 "policy": "dfs"},
        "full": {"K1": 20, "K2": 15, "spatial_realizations": 100, "slots_per_realization": 10000,
                 "policy": "dfs"},
    },
    "sec4c-comparison": {
        "desk": {"K1": 10, "K2": 5, "group_sizes": (5,), "spatial_realizations": 20,
                 "slots_per_realization": 10000, "policy": "gfs"},
        "full": {"K1": 50, "K2": 25, "group_sizes": (5, 5, 5, 5, 5), "spatial_realizations": 150,
                 "slots_per_realization": 12000, "policy": "gfs"},
    },
    "table5-gfs": {"desk": {"slots": 200_000}, "full": {"slots": 2_000_000}},
}


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(c) if isinstance(c, (str, int)) else _fmt(c) for c in row) + "\n")


def _parse_overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _build_config(args) -> SystemConfig:
    overrides = _parse_overrides(getattr(args, "set", None))
    preset = getattr(args, "preset", None)
    if preset and preset != "table5-gfs":
        base = dict(PRESETS[preset][args.scale])
        cfg = SystemConfig(**base)
        if args.config:
            raise ConfigError("give either --preset or --config, not both")
        for key, val in overrides.items():
            from d2dsched.model import _parse_value
            cfg = cfg.override(**{key: _parse_value(key, val)})
        return cfg
    if args.config:
        return load_config(args.config, overrides)
    from d2dsched.model import parse_config_text
    return parse_config_text("", overrides)


def _report_rows(report: simcore.ExperimentReport):
    for uid in range(report.n_users):
        yield (uid, report.user_kinds[uid], int(report.user_group[uid]),
               report.access_prob[uid], report.upi[uid],
               report.selected_rate[uid], report.effective_rate[uid])


def _write_report(report: simcore.ExperimentReport, out_dir: str, emit_cdfs: bool = False,
                  theory_curves=None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "report.csv"),
               ["user_id", "class", "group_id", "access_prob", "upi", "selected_rate",
                "effective_rate"],
               _report_rows(report))
    with open(os.path.join(out_dir, "run_meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"timestamp = {datetime.datetime.now().isoformat()}\n")
        fh.write(f"policy = {report.policy}\n")
        fh.write(f"seed = {report.seed}\n")
        fh.write(f"total_slots = {report.total_slots}\n")
        fh.write(f"config_digest = {report.config_digest}\n")
    if report.group_access_prob is not None:
        _write_csv(os.path.join(out_dir, "group_access.csv"),
                   ["group_id", "size", "access_prob"],
                   [(gi, report.structure.groups[gi].size, p)
                    for gi, p in enumerate(report.group_access_prob)])
    if emit_cdfs:
        for j, samples in enumerate(report.selected_snr):
            if samples.size < 1000:
                continue
            grid = np.quantile(samples, np.linspace(0.001, 0.999, 512))
            emp = np.searchsorted(np.sort(samples), grid, side="right") / samples.size
            theory = np.full_like(grid, np.nan)
            if theory_curves is not None and j in theory_curves:
                theory = theory_curves[j].evaluate(grid)
            _write_csv(os.path.join(out_dir, f"cdf_{j}.csv"),
                       ["s_db", "f_emp", "f_theory", "abs_diff"],
                       zip(10.0 * np.log10(grid), emp, theory, np.abs(emp - theory)))


def cmd_run(args) -> int:
    if args.preset == "table5-gfs":
        slots = PRESETS["table5-gfs"][args.scale]["slots"]
        policy = "gfs"
        for item in args.set or []:
            key, val = item.split("=", 1)
            if key.strip() == "policy":
                policy = val.strip()
            elif key.strip() == "slots_per_realization":
                slots = int(val)
            else:
                raise ConfigError(f"table5-gfs preset accepts only policy/slots overrides, got {key!r}")
        structure = fixed_grouping(TABLE5_SIZES, len(TABLE5_MEANS), nu=1.0)
        report = simcore.run_standalone(TABLE5_MEANS, TABLE5_SHAPES, structure, policy,
                                        slots, seed=args.seed)
        _write_report(report, args.out, emit_cdfs=args.emit_cdfs)
        return 0
    config = _build_config(args)
    report = simcore.run_experiment(config)
    theory = None
    if args.emit_cdfs and config.policy == "dfs" and np.all(config.shapes_per_contender() == 1.0):
        K = config.K1 + 2 * config.K2
        cell, d2d = analytics.dfs_unconditional_cdfs(config, K)
        theory = {j: (cell if j < config.K1 else d2d) for j in range(config.n_contenders)}
    _write_report(report, args.out, emit_cdfs=args.emit_cdfs, theory_curves=theory)
    return 0


def cmd_weights(args) -> int:
    sizes = [int(t) for t in args.sizes.split(",")]
    nus = [float(t) for t in args.nu.split(",")] if args.nu else [1.0] * len(sizes)
    if len(nus) != len(sizes):
        raise ConfigError("--nu must list one factor per group")
    from d2dsched.grouping import Group, GroupStructure
    nxt = 0
    groups = []
    for s, nu in zip(sizes, nus):
        groups.append(Group(tuple(range(nxt, nxt + s)), nu))
        nxt += s
    structure = GroupStructure(tuple(groups))
    pw = solve_group_weights(structure)
    probs = group_access_prob(structure, pw)
    header = ["group_id", "size", "nu", "w", "mu", "access_prob", "upi"]
    rows = [(gi, sizes[gi], nus[gi], pw.w[gi], pw.mu[gi], probs[gi],
             upi_closed_form(gi, structure, pw)) for gi in range(len(sizes))]
    lines = [",".join(header)] + [
        ",".join(str(c) if isinstance(c, int) else _fmt(c) for c in row) for row in rows]
    print("\n".join(lines))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_csv(os.path.join(args.out, "weights.csv"), header, rows)
    return 0


def cmd_group(args) -> int:
    config = _build_config(args)
    if config.K2 < 1:
        raise ConfigError("grouping requires K2 >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.rng_seed, spawn_key=(0, 0)))
    spatial = sample_spatial(config, rng)
    colored = greedy_coloring(build_conflict_graph(spatial, config.interference_radius_m))
    group_of = colored.group_of()
    xy = spatial.centroid_xy()
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "grouping.csv"),
               ["pair_id", "group_id", "centroid_x", "centroid_y"],
               [(p, group_of[p], xy[p, 0], xy[p, 1]) for p in range(config.K2)])
    return 0


def cmd_analytic(args) -> int:
    config = _build_config(args)
    K = config.K1 + 2 * config.K2
    os.makedirs(args.out, exist_ok=True)

    def emit(name: str, curve: analytics.AnalyticCurve) -> None:
        _write_csv(os.path.join(args.out, f"curve_{name}.csv"),
                   ["s_linear", "s_db", "f"],
                   zip(curve.grid, 10.0 * np.log10(curve.grid), curve.values))

    if args.curve == "dfs-unconditional":
        cell, d2d = analytics.dfs_unconditional_cdfs(config, K)
        emit("cellular", cell)
        emit("d2d", d2d)
        return 0
    shapes = config.shapes_per_contender()
    base_c = GammaSnrCdf(shapes[0], simcore.contenders_from_spatial(
        config, sample_spatial(config, np.random.default_rng(config.rng_seed))).mean_snr[0])
    base_d = None
    if config.K2 > 0:
        cs = simcore.contenders_from_spatial(
            config, sample_spatial(config, np.random.default_rng(config.rng_seed)))
        base_d = GammaSnrCdf(shapes[config.K1], cs.mean_snr[config.K1])
    if args.curve == "bcs":
        emit("cellular", analytics.bcs_selected_cdf(base_c, K))
    elif args.curve == "cfs":
        cell, d2d = analytics.cfs_selected_cdfs(base_c, base_d, config.K1, config.K2)
        emit("cellular", cell)
        emit("d2d", d2d)
    elif args.curve == "dfs":
        cell, d2d = analytics.dfs_selected_cdfs(base_c, base_d, K)
        emit("cellular", cell)
        emit("d2d", d2d)
    elif args.curve == "gfs":
        structure = fixed_grouping(args.group_sizes or (config.K2,), config.K2, nu=0.5)
        pw = solve_group_weights(structure)
        emit("d2d", analytics.gfs_selected_cdf(base_d, structure.groups[0].size,
                                               float(pw.mu[0])))
    else:
        raise ConfigError(f"unknown curve {args.curve!r}")
    return 0


def cmd_sweep(args) -> int:
    values = args.sweep_values.split(",")
    for val in values:
        sub = argparse.Namespace(**vars(args))
        sub.set = list(args.set or []) + [f"{args.sweep_key}={val}"]
        sub.out = os.path.join(args.out, f"{args.sweep_key}_{val}")
        sub.preset = args.preset
        cmd_run(sub)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dsched",
                                     description="cellular + D2D scheduling simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_flags=True):
        if config_flags:
            p.add_argument("--config", help="flat key = value config file")
            p.add_argument("--preset", choices=sorted(PRESETS),
                           help="built-in scenario instead of a config file")
            p.add_argument("--scale", choices=("desk", "full"), default="desk")
            p.add_argument("--set", action="append", metavar="KEY=VALUE",
                           help="override a config key (repeatable)")
        p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="run a Monte Carlo experiment")
    common(p_run)
    p_run.add_argument("--emit-cdfs", action="store_true",
                       help="also write per-contender selected-SNR CDF files")
    p_run.add_argument("--seed", type=int, default=12345,
                       help="seed for the table5-gfs standalone preset")
    p_run.set_defaults(func=cmd_run)

    p_w = sub.add_parser("weights", help="solve max-min group weights")
    p_w.add_argument("--sizes", required=True, help="comma list of group sizes")
    p_w.add_argument("--nu", help="comma list of fairness factors (default all 1)")
    p_w.add_argument("--out", default=None)
    p_w.set_defaults(func=cmd_weights)

    p_g = sub.add_parser("group", help="sample a layout and color its conflict graph")
    common(p_g)
    p_g.set_defaults(func=cmd_group)

    p_a = sub.add_parser("analytic", help="emit closed-form selected-SNR curves")
    common(p_a)
    p_a.add_argument("--curve", required=True,
                     choices=("bcs", "cfs", "dfs", "dfs-unconditional", "gfs"))
    p_a.add_argument("--group-sizes", type=lambda s: tuple(int(t) for t in s.split(",")),
                     default=None)
    p_a.set_defaults(func=cmd_analytic)

    p_s = sub.add_parser("sweep", help="repeat run over a grid of one config key")
    common(p_s)
    p_s.add_argument("--emit-cdfs", action="store_true")
    p_s.add_argument("--seed", type=int, default=12345)
    p_s.add_argument("--sweep-key", required=True)
    p_s.add_argument("--sweep-values", required=True, help="comma list of values")
    p_s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
