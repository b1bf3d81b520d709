"""Command line front end.

Subcommands: ``run`` (one evaluation), ``sweep`` (evaluations along one
hyper-parameter axis), ``synth`` (write a synthetic base/novel bundle
pair), ``validate`` (bundle linting). Exit code 0 on success; on
failure the last line of stdout is a JSON object with "error" and
"message" fields.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .featurestore import load_bundle, save_bundle
from .harness import (
    METHODS,
    PRESETS,
    SWEEP_AXES,
    RunConfig,
    apply_preset,
    evaluate,
    result_to_json,
    sweep,
    sweep_table,
    synth_generate,
)


class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors obey the machine-readable error contract."""

    def error(self, message):
        print(json.dumps({"error": "ArgumentError", "message": message}))
        raise SystemExit(2)


def _add_eval_flags(p: argparse.ArgumentParser):
    p.add_argument("--base", required=True, help="base-split bundle (manifest or CSV)")
    p.add_argument("--novel", required=True, help="novel-split bundle to sample tasks from")
    p.add_argument("--ways", type=int, help="classes per task")
    p.add_argument("--shots", type=int, help="labeled samples per class")
    p.add_argument("--queries", type=int, help="total unlabeled samples per task")
    p.add_argument("--setting", choices=("balanced", "dirichlet"))
    p.add_argument("--alpha-star", type=float, help="Dirichlet concentration for query counts")
    p.add_argument("--tasks", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=sorted(METHODS))
    p.add_argument("--t-km", type=float)
    p.add_argument("--t-vb", type=float)
    p.add_argument("--s-max", type=float)
    p.add_argument("--alpha-o", type=float)
    p.add_argument("--beta-o", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--n-step", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="result path (JSON for run, CSV for sweep)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named temperature/setting bundle")


def _resolve_config(args) -> RunConfig:
    """Defaults, then preset, then explicit flags, strongest last."""
    cfg = RunConfig(
        base_path=args.base,
        novel_path=args.novel,
        tasks=args.tasks,
        workers=args.workers,
        output=args.output,
    )
    if args.preset:
        cfg = apply_preset(cfg, args.preset)
    if args.method is not None:
        cfg = replace(cfg, method=args.method)
    task_over = {
        key: value
        for key, value in {
            "ways": args.ways,
            "shots": args.shots,
            "query_total": args.queries,
            "setting": args.setting,
            "alpha_star": args.alpha_star,
            "seed": args.seed,
        }.items()
        if value is not None
    }
    model_over = {
        key: value
        for key, value in {
            "t_km": args.t_km,
            "t_vb": args.t_vb,
            "s_max": args.s_max,
            "alpha_o": args.alpha_o,
            "beta_o": args.beta_o,
            "gamma": args.gamma,
            "n_step": args.n_step,
        }.items()
        if value is not None
    }
    if task_over:
        cfg = replace(cfg, task=replace(cfg.task, **task_over))
    if model_over:
        cfg = replace(cfg, model=replace(cfg.model, **model_over))
    return cfg


def _cmd_run(args) -> int:
    result = evaluate(_resolve_config(args))
    sys.stdout.write(result_to_json(result))
    return 0


def _cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    output, cfg = cfg.output, replace(cfg, output=None)
    caster = int if args.axis in ("shots", "query_total") else float
    values = [caster(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ValueError("--values must hold at least one number")
    results = sweep(cfg, args.axis, values)
    table = sweep_table(args.axis, values, results)
    sys.stdout.write(table)
    if output:
        out = Path(output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(table)
        detail = out.with_suffix(out.suffix + ".json")
        detail.write_text(
            json.dumps([r.to_json_dict() for r in results], sort_keys=True, indent=2) + "\n"
        )
    return 0


def _cmd_synth(args) -> int:
    base, novel = synth_generate(
        classes=args.classes,
        dim=args.dim,
        samples_per_class=args.samples_per_class,
        cluster_std=args.cluster_std,
        separation=args.separation,
        within_cov_skew=args.within_cov_skew,
        seed=args.seed,
    )
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    base_manifest = save_bundle(base, out / "base.json", dtype=args.dtype)
    novel_manifest = save_bundle(novel, out / "novel.json", dtype=args.dtype)
    print(json.dumps({"base": str(base_manifest), "novel": str(novel_manifest)}))
    return 0


def _cmd_validate(args) -> int:
    reports = []
    for path in args.bundle:
        bundle = load_bundle(path)
        sizes = [len(rows) for rows in bundle.class_index.values()]
        reports.append(
            {
                "path": str(path),
                "split": bundle.split_tag,
                "n": bundle.n,
                "d": bundle.dim,
                "classes": len(bundle.class_ids),
                "min_class_size": min(sizes),
                "max_class_size": max(sizes),
            }
        )
    print(json.dumps(reports, sort_keys=True, indent=2))
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="bavardage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="evaluate one method over many tasks")
    _add_eval_flags(run_p)
    run_p.set_defaults(handler=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="evaluate along one hyper-parameter axis")
    _add_eval_flags(sweep_p)
    sweep_p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.set_defaults(handler=_cmd_sweep)

    synth_p = sub.add_parser("synth", help="generate a synthetic base/novel bundle pair")
    synth_p.add_argument("--classes", type=int, default=10)
    synth_p.add_argument("--dim", type=int, default=16)
    synth_p.add_argument("--samples-per-class", type=int, default=200)
    synth_p.add_argument("--cluster-std", type=float, default=1.0)
    synth_p.add_argument("--separation", type=float, default=4.0)
    synth_p.add_argument("--within-cov-skew", type=float, default=0.0)
    synth_p.add_argument("--seed", type=int, default=0)
    synth_p.add_argument("--dtype", choices=("f32", "f64"), default="f32")
    synth_p.add_argument("--output", required=True, help="directory for the bundle files")
    synth_p.set_defaults(handler=_cmd_synth)

    validate_p = sub.add_parser("validate", help="lint one or more bundles")
    validate_p.add_argument("bundle", nargs="+")
    validate_p.set_defaults(handler=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
