"""Corpus statistics for a user-supplied M2 file under every reference policy.

With licensed corpora at hand this shows which WER policy reproduces a
published table value, e.g.

    python3 scripts/conformance.py conll14.m2 --expect-wer 12.35 --expect-sentences 1312 --expect-refs 2
"""

import argparse
import sys
from pathlib import Path

from crossgec.m2 import load_m2
from crossgec.wer import REF_POLICIES, corpus_properties


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("m2", type=Path)
    ap.add_argument("--expect-wer", help="percentage as printed, e.g. 12.35")
    ap.add_argument("--expect-sentences", type=int)
    ap.add_argument("--expect-refs", type=int)
    args = ap.parse_args()

    corpus = load_m2(args.m2, args.m2.stem)
    ok = True
    props = {pol: corpus_properties(corpus, ref_policy=pol) for pol in REF_POLICIES}
    first = props[REF_POLICIES[0]]
    print(f"sentences  {first.sentence_count}")
    print(f"references {first.reference_count}")
    for pol, p in props.items():
        mark = " <- matches" if args.expect_wer and p.wer_percent == args.expect_wer else ""
        print(f"wer[{pol:5}] {p.wer_percent}{mark}")
    if args.expect_sentences is not None and first.sentence_count != args.expect_sentences:
        ok = False
    if args.expect_refs is not None and first.reference_count != args.expect_refs:
        ok = False
    if args.expect_wer and not any(p.wer_percent == args.expect_wer for p in props.values()):
        print(f"no policy reproduces WER {args.expect_wer}")
        ok = False
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
