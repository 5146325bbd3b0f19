"""Zero-delay g2 against detuning, and the map of its minimum over (kappa, g0)."""

import argparse
import warnings
from pathlib import Path

import numpy as np

from blockade_lab import correlations as corr
from blockade_lab.params import SystemParams


def detuning_sweep(out_dir: Path, points: int):
    p = SystemParams.from_ratios(0.5, 0.15)
    d = np.linspace(-2.5, 2.0, points)
    g2, _, _ = corr.g2_series_values(d, p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        approx = corr.g2_approx(d, p)
    path = out_dir / "g2_vs_detuning.csv"
    np.savetxt(path, np.column_stack([d, g2, approx]), delimiter=",",
               header="delta0/omega_m,g2_series,g2_approx", fmt="%.10e")
    i = int(np.argmin(g2))
    print(f"g2 minimum {g2[i]:.4f} at delta0 = {d[i]:+.3f} omega_m -> {path}")


def minimum_map(out_dir: Path, n_kappa: int, n_g0: int):
    kappas = np.geomspace(0.05, 4.0, n_kappa)
    g0s = np.geomspace(0.05, 1.5, n_g0)
    rows = []
    for g0 in g0s:
        for kappa in kappas:
            try:
                _, g_min = corr.g2_min(SystemParams.from_ratios(g0, kappa), full_range=True)
            except Exception as exc:  # keep the map going, mark the cell
                print(f"g0={g0:.3f} kappa={kappa:.3f}: {type(exc).__name__}")
                g_min = np.nan
            rows.append((g0, kappa, g_min))
    path = out_dir / "g2_min_map.csv"
    np.savetxt(path, np.array(rows), delimiter=",", header="g0/omega_m,kappa/omega_m,min_g2",
               fmt="%.10e")
    quantum = np.array([r[2] < 0.9 for r in rows]).reshape(n_g0, n_kappa)
    edge = [kappas[row.argmin()] if not row.all() and row.any() else np.nan for row in quantum]
    print(f"smallest kappa with min g2 >= 0.9, per g0: {np.round(edge, 3)} -> {path}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results/g2")
    parser.add_argument("--points", type=int, default=901)
    parser.add_argument("--grid", type=int, nargs=2, default=(24, 16), metavar=("N_KAPPA", "N_G0"))
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    detuning_sweep(out_dir, args.points)
    minimum_map(out_dir, *args.grid)


if __name__ == "__main__":
    main()
