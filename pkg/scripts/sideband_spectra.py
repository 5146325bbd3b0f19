"""Excitation spectra in the resolved-sideband and bad-cavity regimes.

Writes one CSV per (kappa, eta) pair with the series, quadrature and (for
kappa > omega_m) Gaussian line shapes against the bare detuning.
"""

import argparse
import warnings
from pathlib import Path

import numpy as np

from blockade_lab.params import SystemParams
from blockade_lab.spectrum import s_bad_cavity, s_integral, s_series


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="results/spectra")
    parser.add_argument("--points", type=int, default=801)
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for kappa, Q, span in ((0.1, 150.0, (-2.0, 4.0)), (4.0, 150.0, (-12.0, 12.0))):
        for eta in (0.25, 0.5, 1.0):
            p = SystemParams.from_ratios(eta, kappa, Q=Q)
            d = np.linspace(*span, args.points)
            cols = [d, s_series(d, p), s_integral(d, p)]
            header = "delta0/omega_m,S_series,S_integral"
            if kappa > 1:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    cols.append(s_bad_cavity(d, p))
                header += ",S_bad_cavity"
            path = out_dir / f"spectrum_kappa{kappa:g}_eta{eta:g}.csv"
            np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, fmt="%.10e")
            peak = d[np.argmax(cols[1])]
            print(f"kappa={kappa:g} eta={eta:g}: peak at {peak:+.3f} omega_m -> {path}")


if __name__ == "__main__":
    main()
