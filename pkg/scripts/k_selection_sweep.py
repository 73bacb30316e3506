"""Coherence and overlap per K on planted corpora; reports the chosen K per seed."""

import argparse

from conceptrealm.experiments import k_selection_trial

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--seeds", type=int, default=10)
ap.add_argument("--topics", type=int, default=3)
ap.add_argument("--k-max", type=int, default=8)
args = ap.parse_args()

chosen = []
for s in range(args.seeds):
    res = k_selection_trial(s, args.topics, args.k_max)
    chosen.append(res.chosen_k)
    cells = " ".join(f"{r.k}:{r.score:+.2f}" for r in res.records)
    print(f"seed {s:2d}  chosen {res.chosen_k}  {cells}")
print(f"K={args.topics} chosen in {chosen.count(args.topics)}/{args.seeds} seeds")
