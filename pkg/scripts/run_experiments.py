"""Run experiment specs through ``topoinfer simulate`` and collect one table.

Example: python3 scripts/run_experiments.py experiments/power_*.json --out results
"""

import argparse
from pathlib import Path

from topoinfer.cli import run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("specs", nargs="+", help="experiment spec JSON files")
    parser.add_argument("--out", required=True, help="directory for per-spec outputs and table.txt")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()
    out = Path(args.out)
    tables = []
    for spec in sorted(map(Path, args.specs)):
        argv = ["simulate", str(spec), "--out", str(out / spec.stem)]
        if args.threads:
            argv += ["--threads", str(args.threads)]
        if run(argv) != 0:
            raise SystemExit(f"failed: {spec}")
        tables.append((out / spec.stem / "table.txt").read_text())
    (out / "table.txt").write_text("".join(tables))


if __name__ == "__main__":
    main()
