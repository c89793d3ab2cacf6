"""D-Bucket and S-Bucket capacity sweeps."""
import sys

from bucket_index.cli import main

if __name__ == "__main__":
    extra = sys.argv[1:]
    rc = main(["sweep", "--param", "dbucket", "--bulk", "200000", "--ops", "200000",
               "--report", "csv", *extra])
    rc |= main(["sweep", "--param", "sbucket", "--bulk", "200000", "--ops", "200000",
                "--report", "csv", *extra])
    sys.exit(rc)
