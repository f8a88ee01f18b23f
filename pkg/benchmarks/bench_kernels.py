"""Time the compiled grid kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py --reps 5
"""
import sys

from slamstop.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench-kernels", *sys.argv[1:]]))
