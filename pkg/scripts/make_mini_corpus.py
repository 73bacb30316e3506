"""Regenerate the bundled mini-corpus (data/mini/corpus.jsonl).

Four synthetic projects of different ages and concept counts, concatenated
into one export. Ground truth for each project lands next to the corpus.
"""

import argparse
import json
from pathlib import Path

from conceptrealm.synth import SynthConfig, generate, write_export

PROJECTS = [
    # key, topics, docs, years, start, leaver
    ("ALPHA", 3, 240, 3, 2012, True),
    ("BETA", 4, 260, 5, 2010, True),
    ("GAMMA", 3, 180, 4, 2014, False),
    ("DELTA", 5, 300, 6, 2008, True),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "mini"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    issues, comments, truth = [], [], {}
    for i, (key, topics, docs, years, start, leaver) in enumerate(PROJECTS):
        cfg = SynthConfig(seed=args.seed + i, topics=topics, docs=docs, years=years, start_year=start,
                          project=key, leaver=leaver, developers=3 * topics)
        iss, com, t = generate(cfg)
        issues += iss
        comments += com
        truth[key] = t.to_dict()
    write_export(out / "corpus.jsonl", issues, comments)
    (out / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{len(issues)} issues, {len(comments)} comments -> {out / 'corpus.jsonl'}")


if __name__ == "__main__":
    main()
