#!/usr/bin/env python3
"""Writes data/annulus15.json: a synthetic saddle-shaped annulus outline.

15 labelled points at equal arclength on a saddle ellipse, scaled so that
neighbouring points sit 5 mm apart, with the first point repeated at the end
to close the loop.
"""
import json
import sys
from pathlib import Path

import numpy as np

CENTRE = np.array([0.0, 0.0, 48.0])
ASPECT = 10.5 / 13.0  # minor / major semi-axis
SADDLE = 1.5 / 13.0   # saddle height / major semi-axis
COUNT = 15
SPACING = 5.0


def curve(major, psi):
    return np.stack([major * np.cos(psi),
                     major * ASPECT * np.sin(psi),
                     major * SADDLE * np.cos(2 * psi)], axis=-1) + CENTRE


def sample(major):
    psi = np.linspace(0.0, 2 * np.pi, 20001)
    pts = curve(major, psi)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    at = np.interp(np.arange(COUNT) * s[-1] / COUNT, s, psi)
    return curve(major, at)


def mean_chord(pts):
    loop = np.vstack([pts, pts[:1]])
    return np.linalg.norm(np.diff(loop, axis=0), axis=1).mean()


def main(out):
    major = 13.0
    for _ in range(20):
        major *= SPACING / mean_chord(sample(major))
    pts = sample(major)
    points = [{"label": f"A{i + 1:02d}", "x_mm": round(p[0], 4), "y_mm": round(p[1], 4),
               "z_mm": round(p[2], 4)} for i, p in enumerate(pts)]
    first = dict(points[0], label="A01-close")
    doc = {"source": "synthetic saddle annulus, 15 points 5 mm apart (not patient data)",
           "points": points + [first]}
    Path(out).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/annulus15.json")
