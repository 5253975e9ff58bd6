"""Command-line entry point.

Every run writes a manifest (parsed configuration, seed, package versions and
output files) next to its outputs; ``topoinfer replay MANIFEST`` reruns it.
On failure the command exits with status 2, names the failing stage, and
removes any outputs it had already written.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .experiments import ExperimentSpec, default_threads, format_table, run_experiment
from .hk import DEFAULT_ORDER, DEFAULT_SIGMA, build_basis, grid_samples, hk_coefficients, standardize
from .inference import (DEFAULT_RELABEL_PERIOD, DEFAULT_STEPS, permanova_test, t_anova_test, two_sample_test)
from .ph import check_dissimilarity, pairwise_distances, rips_persistence
from .simgen import similarity_to_dissimilarity
from .tlsm import extract_tlsm_features, standardized_records, tlsm_compare, tlsm_compare_groups

SIMILARITY_MODES = ("dissimilarity", "one_minus_abs")


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def convert_similarity(matrix, mode: str = "dissimilarity") -> np.ndarray:
    """Turn an input matrix into a dissimilarity matrix.

    ``one_minus_abs`` maps correlations to 1 - |s| with a zero diagonal;
    ``dissimilarity`` only validates.
    """
    if mode == "one_minus_abs":
        return similarity_to_dissimilarity(matrix)
    if mode == "dissimilarity":
        return check_dissimilarity(matrix)
    raise ValueError(f"similarity mode must be one of {SIMILARITY_MODES}")


@dataclass
class Outputs:
    """Files written by a run, removed again if the run fails."""

    paths: list[Path] = field(default_factory=list)

    def add(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.paths.append(path)
        return path

    def cleanup(self):
        for p in reversed(self.paths):
            if p.is_file():
                p.unlink()


def _versions() -> dict:
    import numba
    import scipy
    return {"topoinfer": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


# input loading -----------------------------------------------------------


def _load_input_matrix(path: Path, args) -> np.ndarray:
    if args.input_kind == "points":
        return pairwise_distances(io.read_point_cloud(path))
    return convert_similarity(io.read_matrix(path), args.similarity_mode)


def _diagram_from_path(path: Path, args):
    if path.suffix == ".json":
        d = io.read_diagram(path)
        if d.dim != args.dim:
            raise ValueError(f"{path}: diagram has dim {d.dim}, expected {args.dim}")
        return d
    return rips_persistence(_load_input_matrix(path, args), max_dim=args.dim)[args.dim]


def _load_group(paths, args, label):
    files = io.list_inputs(paths)
    if not files:
        raise ValueError(f"group {label} has no input files")
    return [_diagram_from_path(p, args) for p in files]


# subcommands -------------------------------------------------------------


def cmd_pd(args, out: Outputs) -> dict:
    stage = "read"
    try:
        dm = _load_input_matrix(Path(args.input), args)
        stage = "persistence"
        diagrams = rips_persistence(dm, max_dim=args.dim, representatives=args.representatives)
        diagram = diagrams[args.dim]
        stage = "write"
        io.write_diagram(out.add(args.out), diagram)
        if args.grid_sigmas:
            if not len(diagram):
                raise ValueError("cannot sample a heat-kernel grid for an empty diagram")
            std, (unit,) = standardize([diagram])
            vec = hk_coefficients(unit, build_basis(args.order))
            grid_path = out.add(Path(args.out).with_suffix(".grid.csv"))
            with open(grid_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["sigma", "birth", "death", "value"])
                for sigma in args.grid_sigmas:
                    for x, y, v in grid_samples(vec, sigma, args.grid_resolution):
                        w.writerow([repr(float(sigma)), repr(float(x)), repr(float(y)), repr(float(v))])
    except (ValueError, OSError) as exc:
        raise StageError(stage, str(exc)) from exc
    return {"pairs": len(diagram)}


def _groups_from_args(args) -> list:
    try:
        return [_load_group(paths, args, k) for k, paths in enumerate(args.group)]
    except (ValueError, OSError) as exc:
        raise StageError("read", str(exc)) from exc


def _write_result(args, out: Outputs, result) -> dict:
    try:
        io.write_test_result(out.add(args.out), result, include_trace=args.trace)
    except OSError as exc:
        raise StageError("write", str(exc)) from exc
    return result.to_dict()


def cmd_test2(args, out: Outputs) -> dict:
    if len(args.group) != 2:
        raise StageError("config", "test2 needs exactly two --group options")
    groups = _groups_from_args(args)
    try:
        result = two_sample_test(groups[0], groups[1], args.sigma, args.order, args.steps, args.seed,
                                 args.relabel_period, keep_trace=args.trace)
    except ValueError as exc:
        raise StageError("inference", str(exc)) from exc
    return _write_result(args, out, result)


def cmd_anova(args, out: Outputs) -> dict:
    if len(args.group) < 2:
        raise StageError("config", "anova needs at least two --group options")
    groups = _groups_from_args(args)
    try:
        result = t_anova_test(groups, args.sigma, args.order, args.steps, args.seed, args.relabel_period,
                              keep_trace=args.trace)
    except ValueError as exc:
        raise StageError("inference", str(exc)) from exc
    return _write_result(args, out, result)


def cmd_permanova(args, out: Outputs) -> dict:
    if len(args.group) < 2:
        raise StageError("config", "permanova needs at least two --group options")
    groups = _groups_from_args(args)
    try:
        result = permanova_test(groups, args.sigma, args.order, args.steps, args.seed, keep_trace=args.trace)
    except ValueError as exc:
        raise StageError("inference", str(exc)) from exc
    return _write_result(args, out, result)


def cmd_simulate(args, out: Outputs) -> dict:
    try:
        data = io.read_json(args.spec)
        overrides = {"seed": args.seed, "n_steps": args.steps, "n_replicates": args.replicates,
                     "relabel_period": args.relabel_period, "order": args.order}
        data.update({k: v for k, v in overrides.items() if v is not None})
        if args.sigma is not None:
            data["sigmas"] = [args.sigma]
        spec = ExperimentSpec.from_dict(data)
    except (ValueError, TypeError, OSError) as exc:
        raise StageError("config", str(exc)) from exc
    try:
        result = run_experiment(spec, args.threads)
    except ValueError as exc:
        raise StageError("simulation", str(exc)) from exc
    outdir = Path(args.out)
    try:
        io.write_json(out.add(outdir / "summary.json"), {"spec": result["spec"], "alpha": result["alpha"],
                                                         "summary": result["summary"]})
        with open(out.add(outdir / "pvalues.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "seed", "sigma", "test", "p_value"])
            for rep in result["replicates"]:
                for sigma, row in rep["p_values"].items():
                    for test, p in row.items():
                        w.writerow([rep["replicate"], rep["seed"], sigma, test, "" if p is None else repr(p)])
        (outdir / "table.txt").write_text(format_table(result) + "\n")
        out.add(outdir / "table.txt")
    except OSError as exc:
        raise StageError("write", str(exc)) from exc
    print(format_table(result))
    return {"summary": result["summary"]}


def cmd_tlsm(args, out: Outputs) -> dict:
    try:
        atlas = io.read_atlas(args.atlas)
        groups = []
        for k, paths in enumerate(args.group):
            files = io.list_inputs(paths)
            if not files:
                raise ValueError(f"group {k} has no input files")
            nets = [convert_similarity(io.read_matrix(p), args.similarity_mode) for p in files]
            groups.append((files, nets))
    except (ValueError, OSError) as exc:
        raise StageError("read", str(exc)) from exc
    try:
        cohorts = [extract_tlsm_features(nets, atlas, args.lk_class, args.k,
                                         subject_ids=[f"{k}:{p.stem}" for p in files])
                   for k, (files, nets) in enumerate(groups)]
    except (ValueError, IndexError) as exc:
        raise StageError("extract", str(exc)) from exc
    try:
        if len(cohorts) == 2:
            result = tlsm_compare(cohorts[0], cohorts[1], args.sigma, args.order, args.steps, args.seed,
                                  args.relabel_period)
        else:
            result = tlsm_compare_groups(cohorts, args.sigma, args.order, args.steps, args.seed,
                                         args.relabel_period)
    except ValueError as exc:
        raise StageError("inference", str(exc)) from exc
    outdir = Path(args.out)
    try:
        io.write_test_result(out.add(outdir / "result.json"), result)
        io.write_polygon_records(out.add(outdir / "polygons.csv"), standardized_records(cohorts))
        io.write_json(out.add(outdir / "dropped.json"), {str(k): c.dropped for k, c in enumerate(cohorts)})
    except OSError as exc:
        raise StageError("write", str(exc)) from exc
    return {**result.to_dict(), "dropped": sum(len(c.dropped) for c in cohorts)}


COMMANDS = {"pd": cmd_pd, "test2": cmd_test2, "anova": cmd_anova, "permanova": cmd_permanova,
            "simulate": cmd_simulate, "tlsm": cmd_tlsm}


# parser ------------------------------------------------------------------


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoinfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output file (or directory for simulate/tlsm)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--order", type=int, default=DEFAULT_ORDER, help="basis order M")
    common.add_argument("--similarity-mode", choices=SIMILARITY_MODES, default="dissimilarity")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--dim", type=int, choices=(0, 1), default=1)
    data.add_argument("--input-kind", choices=("points", "matrix"), default="points",
                      help="how CSV inputs are read")

    test = argparse.ArgumentParser(add_help=False)
    test.add_argument("--sigma", type=_nonneg_float, default=DEFAULT_SIGMA)
    test.add_argument("--steps", type=_positive_int, default=DEFAULT_STEPS)
    test.add_argument("--relabel-period", type=_positive_int, default=DEFAULT_RELABEL_PERIOD)
    test.add_argument("--trace", action="store_true", help="include the permutation trace in the output")
    test.add_argument("--group", action="append", nargs="+", required=True, metavar="PATH",
                      help="files or directories of one group; repeat per group")

    p = sub.add_parser("pd", parents=[common, data], help="persistence diagram of one input")
    p.add_argument("input")
    p.add_argument("--representatives", action="store_true")
    p.add_argument("--grid-sigmas", type=_nonneg_float, nargs="*", default=[],
                   help="also write heat-kernel grid samples at these bandwidths")
    p.add_argument("--grid-resolution", type=_positive_int, default=50)

    for name, help_ in (("test2", "two-sample transposition test"), ("anova", "T-ANOVA across groups"),
                        ("permanova", "PERMANOVA baseline")):
        sub.add_parser(name, parents=[common, data, test], help=help_)

    p = sub.add_parser("simulate", help="run an experiment spec")
    p.add_argument("spec")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=_positive_int, default=None)
    p.add_argument("--replicates", type=_positive_int, default=None)
    p.add_argument("--relabel-period", type=_positive_int, default=None)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--sigma", type=_nonneg_float, default=None, help="replace the experiment's bandwidth list")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker processes (default from TOPOINFER_THREADS, else 1)")

    p = sub.add_parser("tlsm", parents=[common, test], help="topological lesion-symptom mapping")
    p.add_argument("--atlas", required=True)
    p.add_argument("--lk-class", choices=("LK", "LK1", "LK2"), default="LK2")
    p.add_argument("--k", type=int, default=4, help="polygon size")

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    return parser


def _manifest_path(args) -> Path:
    out = Path(args.out)
    if args.command in ("simulate", "tlsm"):
        return out / "manifest.json"
    return out.with_name(out.name + ".manifest.json")


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        try:
            manifest = io.read_json(args.manifest)
            return run(manifest["argv"])
        except (OSError, KeyError, ValueError) as exc:
            print(f"error [replay]: {exc}", file=sys.stderr)
            return 2
    if args.command == "simulate" and args.threads is None:
        try:
            args.threads = default_threads()
        except ValueError as exc:
            print(f"error [config]: {exc}", file=sys.stderr)
            return 2
    out = Outputs()
    try:
        info = COMMANDS[args.command](args, out)
        config = {k: v for k, v in vars(args).items()}
        # thread count does not affect results; keep manifests identical across machines
        config.pop("threads", None)
        io.write_json(out.add(_manifest_path(args)),
                      {"argv": argv, "command": args.command, "config": config,
                       "seed": getattr(args, "seed", None), "versions": _versions(),
                       "outputs": [str(p) for p in out.paths]})
    except StageError as exc:
        out.cleanup()
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected: still leave no partial outputs behind
        out.cleanup()
        print(f"error [{args.command}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.command != "simulate":
        print(json.dumps(info, sort_keys=True))
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
