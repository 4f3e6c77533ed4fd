"""Run the evaluate command over a small phantom set and read the summary.

Equivalent shell session:

    masklime phantom --count 6 --size 128 --seed 1 --out demo_set
    masklime evaluate --manifest demo_set/manifest.txt \
        --annotations demo_set/annotations.json --out demo_eval
"""

import csv
import tempfile
from pathlib import Path

from masklime.cli import main

work = Path(tempfile.mkdtemp(prefix="masklime_demo_"))
phantom_dir = work / "set"
eval_dir = work / "eval"

rc = main(["phantom", "--count", "6", "--size", "128", "--seed", "1", "--out", str(phantom_dir)])
assert rc == 0

config = work / "demo.cfg"
config.write_text("image_side = 128\nsamples = 256\n")

rc = main(
    [
        "evaluate",
        "--manifest", str(phantom_dir / "manifest.txt"),
        "--annotations", str(phantom_dir / "annotations.json"),
        "--out", str(eval_dir),
        "--config", str(config),
    ]
)
assert rc == 0

with open(eval_dir / "coverage.csv", newline="") as fh:
    rows = list(csv.DictReader(fh))

print(f"\n{len(rows)} rows; summary (means over 6 phantoms):")
print(f"{'detector':<10}{'refined':<9}{'n':<4}{'tumor':<10}{'brain':<10}")
for row in rows:
    if row["image"] == "mean":
        print(
            f"{row['detector']:<10}{row['refined']:<9}{row['n']:<4}"
            f"{row['tumor_coverage']:<10}{row['brain_coverage']:<10}"
        )
