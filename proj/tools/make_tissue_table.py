#!/usr/bin/env python3
"""Regenerates data/tissue_properties.csv.

Conductivity and relative permittivity are evaluated from the four-term
Cole-Cole parameterization of Gabriel, Lau and Gabriel (Phys. Med. Biol. 41,
1996), the model behind the IT'IS Foundation tissue property database.

    eps*(w) = eps_inf + sum_n d_n / (1 + (j w tau_n)^(1 - a_n)) + sigma_i / (j w eps0)
    sigma = -w eps0 Im(eps*),  eps_r = Re(eps*)
"""

import argparse
import csv
import sys

import numpy as np

EPS0 = 8.8541878128e-12

# name: (eps_inf, sigma_ionic, [(delta, tau_s, alpha) x 4])
TISSUES = {
    "skin": (4.0, 0.0002, [(32.0, 7.234e-12, 0.0), (1100.0, 32.481e-9, 0.20),
                           (0.0, 159.155e-6, 0.20), (0.0, 15.915e-3, 0.20)]),
    "fat": (2.5, 0.010, [(3.0, 7.958e-12, 0.20), (15.0, 15.915e-9, 0.10),
                         (3.3e4, 159.155e-6, 0.05), (1.0e7, 7.958e-3, 0.01)]),
    "muscle": (4.0, 0.200, [(50.0, 7.234e-12, 0.10), (7000.0, 353.678e-9, 0.10),
                            (1.2e6, 318.310e-6, 0.10), (2.5e7, 2.274e-3, 0.0)]),
    "cortical_bone": (2.5, 0.020, [(10.0, 13.263e-12, 0.20), (180.0, 79.577e-9, 0.20),
                                   (5.0e3, 159.155e-6, 0.20), (1.0e5, 15.915e-3, 0.0)]),
    "cancellous_bone": (2.5, 0.070, [(18.0, 13.263e-12, 0.22), (300.0, 79.577e-9, 0.25),
                                     (2.0e4, 159.155e-6, 0.20), (2.0e7, 15.915e-3, 0.0)]),
}


def dielectric(name, freq_hz):
    eps_inf, sigma_i, terms = TISSUES[name]
    w = 2.0 * np.pi * freq_hz
    eps = complex(eps_inf)
    for delta, tau, alpha in terms:
        eps += delta / (1.0 + (1j * w * tau) ** (1.0 - alpha))
    eps += sigma_i / (1j * w * EPS0)
    return -eps.imag * w * EPS0, eps.real


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--output", default="-")
    ap.add_argument("--fmin", type=float, default=1e4)
    ap.add_argument("--fmax", type=float, default=1e7)
    ap.add_argument("--per-decade", type=int, default=10)
    args = ap.parse_args()

    decades = np.log10(args.fmax / args.fmin)
    count = int(round(decades * args.per_decade)) + 1
    freqs = [float(f) for f in np.round(np.logspace(np.log10(args.fmin), np.log10(args.fmax), count), 6)]

    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["frequency_hz", "tissue_name", "sigma_s_per_m", "eps_r"])
    for name in TISSUES:
        for f in freqs:
            sigma, eps_r = dielectric(name, f)
            writer.writerow([repr(f), name, repr(float(sigma)), repr(float(eps_r))])
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
