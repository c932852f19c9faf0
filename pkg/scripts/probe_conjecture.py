"""Randomized hunt for time-monotonicity violations across all bundled
models.  Any violation beyond tolerance is printed with its reproduction
data; an empty findings list is the expected (but not guaranteed) outcome.
"""

import argparse
import time

import seqtest as st


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--cost", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid-size", type=int, default=501)
    ap.add_argument("--out", default=None, help="optional JSONL file for all reports")
    args = ap.parse_args()

    models = list(st.PROBE_WINDOWS)
    t0 = time.perf_counter()
    reports = st.conjecture_probe(
        models, cost=args.cost, trials=args.trials, seed=args.seed, grid_size=args.grid_size
    )
    elapsed = time.perf_counter() - t0

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(r.to_json() for r in reports) + "\n")

    findings = [r for r in reports if not r.passed]
    per_model = {m: 0 for m in models}
    for r in reports:
        per_model[r.instance["model"]] += 1
    print(f"{args.trials} trials in {elapsed:.0f}s over {per_model}")
    print(f"findings beyond tolerance: {len(findings)}")
    for f in findings:
        print(f.to_json())


if __name__ == "__main__":
    main()
