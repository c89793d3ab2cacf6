"""Differential check over ratios x distributions x hints x fill ratios.

Full scale is 10^6 ops per configuration; pass --ops to shrink it.
"""
import sys

from bucket_index.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify", "--all", "--bulk", "1000000", "--ops", "1000000", "--report", "csv",
                   *sys.argv[1:]]))
