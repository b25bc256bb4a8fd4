#!/usr/bin/env python3
"""Run every evaluation study end to end and leave the tables in a results
directory.

Uses the command-line interface for all heavy lifting, so the numbers here
are exactly what a user would get by hand. The retrieval studies run on a
200-clip world; the filtering study uses a smaller 80-clip world where the
candidate filter is well trained.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from lazyrag.cli import main as cli  # noqa: E402


def run(*argv: str) -> None:
    code = cli(list(argv))
    if code != 0:
        raise SystemExit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--results-dir", default="results")
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--n-clips", type=int, default=200)
    parser.add_argument("--filter-seed", type=int, default=21)
    parser.add_argument("--filter-clips", type=int, default=80)
    args = parser.parse_args()

    results = Path(args.results_dir)
    work = results / "work"
    work.mkdir(parents=True, exist_ok=True)

    config = work / "config.json"
    config.write_text(
        json.dumps({"embedding": {"dimension": 256, "hash_seed": 17}}, indent=2)
    )
    manifest = work / f"corpus_{args.seed}_{args.n_clips}.jsonl"
    filter_manifest = work / f"corpus_{args.filter_seed}_{args.filter_clips}.jsonl"

    run("gen", "--seed", str(args.seed), "--n-clips", str(args.n_clips),
        "--out", str(manifest))
    run("gen", "--seed", str(args.filter_seed), "--n-clips", str(args.filter_clips),
        "--out", str(filter_manifest))

    common = ("--config", str(config), "--results-dir", str(results))
    run("eval", "recall", "--manifest", str(manifest), *common,
        "--n-queries", "100", "--k-grid", "1,2,4,8,20")
    run("eval", "filtering", "--manifest", str(filter_manifest), *common,
        "--n-queries", "72", "--k-grid", "10,20,30,40,50")
    run("eval", "fraction", "--manifest", str(manifest), *common,
        "--n-queries", "200", "--seed", "11", "--k-grid", "2,4,6,8,10,20")
    run("eval", "latency", "--manifest", str(manifest), *common,
        "--n-queries", "200", "--seed", "11", "--k", "4")

    print(f"\nall studies written to {results}/ (json + txt per study)")


if __name__ == "__main__":
    main()
