"""Time the full pipeline (M2 parse, F0.5, GLEU, WER) at FCE scale.

Prints one line per stage and a JSON summary. ``--refs 2`` exercises the
sampled multi-reference GLEU path.
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

from crossgec.harness import evaluate
from crossgec.manifest import load_manifest
from crossgec.synthetic import noisy_hypotheses, random_corpus, write_study


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=32199)
    ap.add_argument("--refs", type=int, default=1)
    ap.add_argument("--iterations", type=int, default=500)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    t0 = time.perf_counter()
    corpus = random_corpus("fce", args.sentences, seed=args.seed, annotators=args.refs)
    hyp = noisy_hypotheses(corpus, "sys", 0, fix_rate=0.6, noise_rate=0.3, seed=args.seed + 1)
    t_gen = time.perf_counter() - t0
    print(f"generate   {t_gen:7.2f}s")

    with tempfile.TemporaryDirectory() as tmp:
        path = write_study(Path(tmp), [corpus], {"sys": {"fce": [hyp]}},
                           params={"iterations": args.iterations})
        t0 = time.perf_counter()
        reports, _ = evaluate(load_manifest(path), jobs=args.jobs)
        t_eval = time.perf_counter() - t0
    print(f"evaluate   {t_eval:7.2f}s")
    (r,) = reports
    print(json.dumps({
        "sentences": r.sentences, "refs": args.refs, "seconds": round(t_eval, 2),
        "f_beta": r.f_beta, "gleu_mean": r.gleu_mean, "gleu_std": r.gleu_std, "wer": r.wer,
    }, indent=2))


if __name__ == "__main__":
    main()
