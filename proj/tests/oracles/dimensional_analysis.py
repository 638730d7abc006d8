#!/usr/bin/env python3
"""Scale ratios between units computed from SI base definitions with exact fractions."""
from fractions import Fraction as F
import sys

# symbol -> (dimension exponents M L T Θ N I J, scale to SI base as a Fraction)
KG, M, S = (1, 0, 0, 0, 0, 0, 0), (0, 1, 0, 0, 0, 0, 0), (0, 0, 1, 0, 0, 0, 0)
HOUR = F(3600)
BASE = {
    "W": ((1, 2, -3, 0, 0, 0, 0), F(1)),
    "kW": ((1, 2, -3, 0, 0, 0, 0), F(1000)),
    "kg/h": ((1, 0, -1, 0, 0, 0, 0), F(1) / HOUR),
    "g/s": ((1, 0, -1, 0, 0, 0, 0), F(1, 1000)),
    "bar": ((1, -1, -2, 0, 0, 0, 0), F(100000)),
    "Pa": ((1, -1, -2, 0, 0, 0, 0), F(1)),
    "mol/h": ((0, 0, -1, 0, 1, 0, 0), F(1) / HOUR),
    "s": ((0, 0, 1, 0, 0, 0, 0), F(1)),
    "h": ((0, 0, 1, 0, 0, 0, 0), HOUR),
}


def factor(a, b):
    da, sa = BASE[a]
    db, sb = BASE[b]
    if da != db:
        return None
    return sa / sb


if __name__ == "__main__":
    for a, b in [("kW", "W"), ("W", "W"), ("kg/h", "g/s"), ("g/s", "kg/h"), ("bar", "Pa"),
                 ("h", "s"), ("kW", "kg/h")]:
        f = factor(a, b)
        print(f"{a} -> {b}: {f} = {float(f) if f is not None else 'incompatible'!r}"
              if f is not None else f"{a} -> {b}: incompatible")
    sys.exit(0)
