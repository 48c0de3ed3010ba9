#!/usr/bin/env python3
"""Writes the synthetic TM/TE spectrum pairs used by the fit tests.

LP (Lorentzian) and UP (Gaussian) follow a two-mode anticrossing around
163 meV with 8 meV coupling; their area split follows the photon fraction,
so the normalised areas cross at 75 degrees. Every TM spectrum also holds a
scaled copy of the TE reference peak. Run from anywhere; output lands next
to this script.
"""
import math
import os
import random

E12 = 163.0
OMEGA = 8.0
SLOPE = 2.5  # meV of cavity detuning per degree
TOTAL_AREA = 10.0
TE_SCALE = 6.0
NOISE = 0.003


def lorentzian(x, amp, center, hwhm):
    return amp / (1.0 + ((x - center) / hwhm) ** 2)


def gaussian(x, amp, center, sigma):
    return amp * math.exp(-0.5 * ((x - center) / sigma) ** 2)


def te_reference(x):
    return gaussian(x, 0.05, 166.0, 3.0)


def write(path, xs, ys):
    with open(path, "w") as f:
        f.write("# unit: meV\n# resolution: 8\n")
        for x, y in zip(xs, ys):
            f.write("%.6f %.10g\n" % (x, y))


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    rng = random.Random(1234)
    xs = [120.0 + 0.5 * i for i in range(181)]
    for angle in range(69, 82, 2):
        detuning = SLOPE * (angle - 75.0)
        half = math.hypot(detuning / 2.0, OMEGA)
        lp_e = E12 + detuning / 2.0 - half
        up_e = E12 + detuning / 2.0 + half
        lp_fraction = 0.5 * (1.0 - detuning / math.hypot(detuning, 2.0 * OMEGA))
        lp_hwhm, up_sigma = 4.0, 4.0
        lp_amp = lp_fraction * TOTAL_AREA / (math.pi * lp_hwhm)
        up_amp = (1.0 - lp_fraction) * TOTAL_AREA / (up_sigma * math.sqrt(2.0 * math.pi))
        tm = [
            lorentzian(x, lp_amp, lp_e, lp_hwhm)
            + gaussian(x, up_amp, up_e, up_sigma)
            + TE_SCALE * te_reference(x)
            + rng.gauss(0.0, NOISE)
            for x in xs
        ]
        te = [te_reference(x) + rng.gauss(0.0, NOISE / 20.0) for x in xs]
        write(os.path.join(here, "tm_%d.dat" % angle), xs, tm)
        write(os.path.join(here, "te_%d.dat" % angle), xs, te)


if __name__ == "__main__":
    main()
