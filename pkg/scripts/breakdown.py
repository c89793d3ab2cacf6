"""get/put time breakdown on each synthetic distribution."""
import sys

from bucket_index.cli import main

if __name__ == "__main__":
    rc = 0
    for dist in ("piecewise", "uniform", "lognormal"):
        print(f"# {dist}")
        rc |= main(["breakdown", "--synthetic", dist, "--bulk", "200000", "--ops", "200000",
                    "--report", "csv", *sys.argv[1:]])
    sys.exit(rc)
