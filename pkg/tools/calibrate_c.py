"""Least-squares fit of the constant c in the variable-node channel term.

Measures the bitwise information of Gray 16-QAM over AWGN on a grid of
SNRs and fits J(sqrt(c * gamma)) to it.
"""

import argparse

import numpy as np

from nbmimo import exit_chart


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=200000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qam", type=int, default=16)
    args = p.parse_args()
    grid = np.arange(0.0, 20.5, 1.0)
    c = exit_chart.calibrate_c(grid, args.samples, args.seed, args.qam)
    print(f"c = {c:.4f}")
    for g in grid[::4]:
        fit = float(exit_chart.j_function(np.sqrt(c * 10 ** (g / 10))))
        print(f"{g:5.1f} dB  measured {exit_chart.awgn_symbol_exit(g, args.samples, args.seed, args.qam):.4f}"
              f"  fitted {fit:.4f}")


if __name__ == "__main__":
    main()
