"""Average group prediction error vs group size (1..256) on lognormal keys."""
import sys

from bucket_index.cli import main

if __name__ == "__main__":
    sys.exit(main(["errcurve", "--synthetic", "lognormal", "--n", "10000", "--report", "csv", *sys.argv[1:]]))
