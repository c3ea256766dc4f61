#!/usr/bin/env python3
"""One-step difficulty maps for the grid world.

For a fixed agent cell and several goal cells, evaluates the one-step
difficulty at every obstacle cell and writes one CSV per goal, with the
synthesizer's chosen obstacle cell printed alongside.
"""

import argparse
from pathlib import Path

from advsynth import build_gridworld, one_step_difficulty, synthesize_discrete

GOALS = [(7, 9), (5, 2), (0, 7)]
AGENT = (3, 5)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/gridworld", help="output directory")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for goal in GOALS:
        scn = build_gridworld(goal)
        rows = [[""] + [str(j) for j in range(10)]]
        for i in range(10):
            vals = [one_step_difficulty(scn, AGENT, (i, j), floor=-15.0)[0] for j in range(10)]
            rows.append([str(i)] + [f"{v:.17g}" for v in vals])
        name = f"goal_{goal[0]}_{goal[1]}.csv"
        (out / name).write_text("\n".join(",".join(r) for r in rows) + "\n")

        res = synthesize_discrete(scn, AGENT)
        print(f"goal {goal}: d* = {res.d_star}, difficulty {res.difficulty:+.3f} -> {name}")


if __name__ == "__main__":
    main()
