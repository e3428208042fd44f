#!/usr/bin/env python3
"""Writes data/inflation_reference.csv: a synthetic chamber inflation curve.

The values stand in for digitized curve data. They follow
the first-stroke stack model with a smooth per-chamber offset plus 0.1 mm
read-off jitter. Approximate by construction; not measurement data.
"""
import sys
from pathlib import Path

import numpy as np

A_MM, H_MM, E, C = 4.0, 0.038, 13.4, 0.409
N, STICTION = 20, 5.0
STEP, P_MAX = 2.5, 100.0
# (amplitude mm, phase rad) of the offset per chamber
OFFSETS = {1: (0.9, 0.3), 2: (1.2, 1.1), 3: (0.7, 2.0)}
JITTER = 0.1


def model(p):
    pe = np.maximum(0.0, p - STICTION) * 1e-3
    return N * 1.324 * C * np.cbrt(pe * A_MM**4 / (E * H_MM))


def main(out):
    rng = np.random.default_rng(4)
    p = np.arange(0.0, P_MAX + 1e-9, STEP)
    lines = ["pressure_kpa,displacement_mm,chamber_id"]
    for chamber, (amp, phase) in OFFSETS.items():
        ramp = np.clip(p / 20.0, 0.0, 1.0)
        offset = amp * ramp * np.sin(2 * np.pi * p / P_MAX + phase)
        d = model(p) + offset + rng.uniform(-JITTER, JITTER, p.size)
        d = np.maximum(d, 0.0)
        d[p <= STICTION] = np.clip(d[p <= STICTION], 0.0, 0.3)
        for pi, di in zip(p, d):
            lines.append(f"{pi:g},{di:.2f},{chamber}")
    Path(out).write_text("\n".join(lines) + "\n")
    dev = max(abs(float(line.split(",")[1]) - model(float(line.split(",")[0])))
              for line in lines[1:] if float(line.split(",")[0]) >= STICTION)
    print(f"max deviation above {STICTION} kPa: {dev:.3f} mm")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "inflation_reference.csv")
