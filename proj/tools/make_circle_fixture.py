#!/usr/bin/env python3
"""Writes data/circle24.json: three implant sites on a 24 mm circle.

The circle lies in the resting target plane z = 50 mm, whose normal faces the
robot (0, 0, -1). In-plane axes are u = +x and v = -y, so site angles match
the chamber angles seen from the robot.
"""
import json
import math
import sys
from pathlib import Path

RADIUS, COUNT, PLANE_Z = 24.0, 3, 50.0


def main(out):
    points = []
    for j in range(COUNT):
        a = 2 * math.pi * j / COUNT
        points.append({"label": f"site{j + 1}",
                       "x_mm": RADIUS * math.cos(a),
                       "y_mm": -RADIUS * math.sin(a),
                       "z_mm": PLANE_Z})
    doc = {"source": f"circle r=24 mm, {COUNT} equally spaced sites in the target rest plane",
           "points": points}
    Path(out).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "circle24.json")
