"""Time graph D-opt against the dense eigendecomposition.

    python benchmarks/bench_dopt.py --sizes 10,100,1000 --reps 5
"""
import sys

from slamstop.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench-dopt", *sys.argv[1:]]))
