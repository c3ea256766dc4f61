#!/usr/bin/env python3
"""Difficulty landscapes for the unicycle scenario.

For each reference state, evaluates the difficulty measure over a grid of
single-obstacle placements and writes one CSV per state (first row/column
carry the axis coordinates) plus a JSON overlay with the synthesizer's
chosen test.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from advsynth import build_unicycle, difficulty, synthesize

STATES = {
    "state_a": np.array([-0.5, 0.5, 0.0]),
    "state_b": np.array([0.5, -0.5, 0.0]),
    "state_c": np.array([0.0, 0.0, 0.0]),
}


def fmt(v):
    return f"{float(v):.17g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/unicycle", help="output directory")
    ap.add_argument("--resolution", type=int, default=50, help="cells per axis")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scn = build_unicycle()
    axis = np.linspace(-1.0, 1.0, args.resolution)

    for label, x in STATES.items():
        values = np.zeros((args.resolution, args.resolution))
        for i, a in enumerate(axis):
            for j, b in enumerate(axis):
                values[i, j] = difficulty(scn, x, np.array([a, b]), floor=-5.0)[0]
        rows = [[""] + [fmt(v) for v in axis]]
        for i, a in enumerate(axis):
            rows.append([fmt(a)] + [fmt(v) for v in values[i]])
        (out / f"{label}.csv").write_text("\n".join(",".join(r) for r in rows) + "\n")

        res = synthesize(scn, x)
        overlay = {
            "state": [float(v) for v in x],
            "d_star": [float(v) for v in np.asarray(res.d_star)],
            "difficulty": res.difficulty,
            "in_gamma": res.in_gamma,
            "min_cell_value": float(values.min()),
        }
        (out / f"{label}_overlay.json").write_text(json.dumps(overlay, indent=2, sort_keys=True) + "\n")
        print(f"{label}: min cell {values.min():+.3f}, synthesizer {res.difficulty:+.3f} "
              f"at d*={overlay['d_star']}")


if __name__ == "__main__":
    main()
