"""End-to-end experiment: synthetic cohort -> preprocessing -> full grid.

Runs the four fusion approaches against both data variants with all six
learners and writes the report files, mirroring the study workflow:

    python3 scripts/run_full_grid.py --n 570 --seed 8 --out runs/grid
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fusemine.cli import main as fusemine


def run(argv) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=570)
    parser.add_argument("--seed", type=int, default=8)
    parser.add_argument("--noise", type=float, default=0.0)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--weights", default="1,1,2")
    parser.add_argument("--out", default="runs/grid")
    args = parser.parse_args(argv)

    out = Path(args.out)
    pass_n = args.n // 3 + args.n % 3
    fail_n = args.n // 3
    drop_n = args.n - pass_n - fail_n
    started = time.perf_counter()

    steps = [
        [
            "synth", "--n", str(args.n), "--seed", str(args.seed),
            "--noise", str(args.noise), "--out", str(out / "raw"),
            "--proportions", str(pass_n), str(fail_n), str(drop_n),
        ],
        ["preprocess", "--data", str(out / "raw"), "--out", str(out / "pre")],
        [
            "experiment", "--data", str(out / "pre"), "--variant", "both",
            "--approach", "all", "--algorithm", "all", "--k", str(args.k),
            "--seed", str(args.seed), "--weights", args.weights,
            "--out", str(out / "reports"),
        ],
    ]
    for step in steps:
        print(f"$ fusemine {' '.join(step)}")
        code = fusemine(step)
        if code != 0:
            return code
    print(f"done in {time.perf_counter() - started:.1f}s; reports in {out / 'reports'}")
    print((out / "reports" / "summary.txt").read_text(encoding="utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
