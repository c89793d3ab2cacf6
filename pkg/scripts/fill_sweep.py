"""Throughput and O_mem for fill ratios 0.3..0.9 (writes CSV to stdout)."""
import sys

from bucket_index.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "--param", "fill", "--bulk", "200000", "--ops", "200000",
                   "--report", "csv", *sys.argv[1:]]))
