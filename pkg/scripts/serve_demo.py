#!/usr/bin/env python3
"""Start the HTTP service with a synthetic corpus already registered.

Handy for driving the console UI or poking the API by hand:

    python3 scripts/serve_demo.py --port 8080
    curl localhost:8080/v1/corpora
"""

import argparse
import sys
from pathlib import Path

import uvicorn

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from lazyrag.corpus import gen_synthetic, save_manifest  # noqa: E402
from lazyrag.service import create_app  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default="demo_data")
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--n-clips", type=int, default=40)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    args = parser.parse_args()

    data_dir = Path(args.data_dir)
    manifest = gen_synthetic(seed=args.seed, n_clips=args.n_clips)
    corpus_dir = data_dir / manifest.corpus_id
    if not (corpus_dir / "manifest.jsonl").exists():
        corpus_dir.mkdir(parents=True, exist_ok=True)
        save_manifest(manifest, corpus_dir / "manifest.jsonl")
        print(f"registered corpus {manifest.corpus_id} ({len(manifest)} clips)")
    else:
        print(f"reusing corpus {manifest.corpus_id} from {corpus_dir}")

    app = create_app(data_dir)
    print(f"try: POST /v1/corpora/{manifest.corpus_id}/preprocess, then query it")
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
