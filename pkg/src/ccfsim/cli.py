"""Batch command-line front end.

Subcommands: ``run`` (config-file experiment), ``preset`` (named experiment
group), ``list-presets`` and ``dump-config``. Every experiment writes
``<id>_samples.csv``, ``<id>_cdf.csv`` and ``<id>_summary.json`` into the
output directory. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from .config import dump_default_config
from .harness import (
    experiment_from_config,
    experiment_presets,
    merge_sample_sets,
    monte_carlo,
    write_cdf_csv,
    write_samples_csv,
    write_summary_json,
)

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    config_path: str | None = None
    preset_name: str | None = None
    out_dir: str | None = None
    seed: int | None = None
    workers: int = 1
    realizations: int | None = None
    dump_trace: bool = False
    dump_dendrogram: bool = False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccfsim",
        description="Clustered cell-free massive MIMO uplink Monte Carlo simulator",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--out", required=True, help="output directory for CSV/JSON artifacts")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--workers", type=int, default=1, help="parallel realization workers")
        p.add_argument(
            "--realizations", type=int, default=None, help="override the realization count"
        )
        p.add_argument("--dump-trace", action="store_true", help="dump the WSRM solver trace")
        p.add_argument(
            "--dump-dendrogram", action="store_true", help="dump the clustering merge list"
        )

    run = sub.add_parser("run", help="run an experiment described by a config file")
    run.add_argument("--config", required=True, help="experiment config file")
    add_common(run)

    preset_names = sorted(experiment_presets().keys())
    preset = sub.add_parser("preset", help="run a named preset experiment group")
    preset.add_argument("name", choices=preset_names, help="preset name")
    add_common(preset)

    sub.add_parser("list-presets", help="list available presets")
    sub.add_parser("dump-config", help="print the fully-resolved default config")
    return parser


def parse_args(argv) -> CliInvocation:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand == "run" and not os.access(ns.config, os.R_OK):
        parser.error(f"config file {ns.config!r} is not readable")
    if getattr(ns, "workers", 1) is not None and getattr(ns, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    return CliInvocation(
        subcommand=ns.subcommand,
        config_path=getattr(ns, "config", None),
        preset_name=getattr(ns, "name", None),
        out_dir=getattr(ns, "out", None),
        seed=getattr(ns, "seed", None),
        workers=getattr(ns, "workers", 1),
        realizations=getattr(ns, "realizations", None),
        dump_trace=getattr(ns, "dump_trace", False),
        dump_dendrogram=getattr(ns, "dump_dendrogram", False),
    )


def _apply_overrides(spec, seed, realizations):
    changes = {}
    if seed is not None:
        changes["base_seed"] = seed
    if realizations is not None:
        changes["realizations"] = realizations
    return dataclasses.replace(spec, **changes) if changes else spec


def _dump_diagnostics(out_dir, experiment_id, sample_set, dump_trace, dump_dendrogram):
    for key, value in sample_set.diagnostics.items():
        stem, kind = key.rsplit("/", 1) if "/" in key else (experiment_id, key)
        if kind == "dendrogram" and dump_dendrogram and value is not None:
            path = os.path.join(out_dir, f"{stem}_dendrogram.csv")
            with open(path, "w", encoding="utf-8") as out:
                out.write("cluster_a,cluster_b,height\n")
                for a, b, height in value.merges:
                    out.write(f"{a},{b},{height!r}\n")
        if kind == "wsrm_trace" and dump_trace and value is not None:
            path = os.path.join(out_dir, f"{stem}_trace.csv")
            with open(path, "w", encoding="utf-8") as out:
                out.write("iteration,objective,grad_norm\n")
                for iteration, (_, obj, gnorm) in enumerate(value.iterates):
                    out.write(f"{iteration},{obj!r},{gnorm!r}\n")


def execute(invocation: CliInvocation) -> int:
    """Run a validated invocation; returns the process exit status."""
    if invocation.subcommand == "dump-config":
        sys.stdout.write(dump_default_config())
        return 0
    if invocation.subcommand == "list-presets":
        for name, specs in sorted(experiment_presets().items()):
            labels = [spec.label(c) for spec in specs for c in spec.controllers]
            sys.stdout.write(f"{name}: {len(specs)} run(s), curves {', '.join(labels)}\n")
        return 0

    collect = invocation.dump_trace or invocation.dump_dendrogram
    if invocation.subcommand == "run":
        spec = experiment_from_config(
            invocation.config_path, seed=invocation.seed, realizations=invocation.realizations
        )
        experiment_id = spec.experiment_id
        specs = [spec]
    else:
        specs = [
            _apply_overrides(spec, invocation.seed, invocation.realizations)
            for spec in experiment_presets()[invocation.preset_name]
        ]
        experiment_id = invocation.preset_name

    os.makedirs(invocation.out_dir, exist_ok=True)
    parts = []
    for spec in specs:
        logger.info("running %s (%d realizations)", spec.experiment_id, spec.realizations)
        parts.append(monte_carlo(spec, workers=invocation.workers, collect_diagnostics=collect))
    sample_set = parts[0] if len(parts) == 1 else merge_sample_sets(experiment_id, parts)

    write_samples_csv(os.path.join(invocation.out_dir, f"{experiment_id}_samples.csv"), sample_set)
    write_cdf_csv(os.path.join(invocation.out_dir, f"{experiment_id}_cdf.csv"), sample_set)
    write_summary_json(os.path.join(invocation.out_dir, f"{experiment_id}_summary.json"), sample_set)
    _dump_diagnostics(
        invocation.out_dir, experiment_id, sample_set, invocation.dump_trace, invocation.dump_dendrogram
    )
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    invocation = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        return execute(invocation)
    except Exception as exc:  # runtime failure -> exit 1 with diagnostic
        print(f"ccfsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
