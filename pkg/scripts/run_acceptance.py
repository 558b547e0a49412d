"""Run the acceptance criteria and write a JSON ledger.

    python3 scripts/run_acceptance.py [ids...] [--out ledger.json]
"""
import argparse
import sys

from minkhyp.acceptance import run_all, write_ledger

ap = argparse.ArgumentParser()
ap.add_argument("ids", nargs="*", type=int)
ap.add_argument("--out", default="ledger.json")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

results = run_all(args.ids or None, progress=lambda r: print(r.line(), flush=True), seed=args.seed)
write_ledger(results, args.out)
sys.exit(0 if all(r.passed for r in results) else 1)
