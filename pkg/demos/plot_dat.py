"""Plot any .dat table written by ``python -m magpath run``.

    python demos/plot_dat.py results/dyson-converge_terms.dat --x m --y term_norm --group lambda_fraction --logy

Columns are named by the ``#`` header line.  Rows can be split into curves
by a grouping column.  Saves a PNG next to the input unless ``--show``.
"""

import argparse
import os

import numpy as np


def read_dat(path):
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
        rows = [line.split() for line in fh if line.strip() and not line.startswith("#")]
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in raw])
        except ValueError:
            cols[name] = np.array(raw)
    return cols


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dat")
    ap.add_argument("--x")
    ap.add_argument("--y", action="append")
    ap.add_argument("--group")
    ap.add_argument("--logx", action="store_true")
    ap.add_argument("--logy", action="store_true")
    ap.add_argument("--show", action="store_true")
    args = ap.parse_args()

    import matplotlib
    if not args.show:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = read_dat(args.dat)
    names = list(cols)
    x = args.x or names[0]
    ys = args.y or [n for n in names if n not in (x, args.group)]
    groups = [None] if not args.group else list(dict.fromkeys(cols[args.group]))

    fig, ax = plt.subplots()
    for g in groups:
        mask = np.ones(len(cols[x]), bool) if g is None else cols[args.group] == g
        for y in ys:
            label = y if g is None else f"{y} ({args.group}={g})"
            ax.plot(cols[x][mask], cols[y][mask], "o-", label=label)
    ax.set_xlabel(x)
    if args.logx:
        ax.set_xscale("log")
    if args.logy:
        ax.set_yscale("log")
    ax.legend()
    if args.show:
        plt.show()
    else:
        out = os.path.splitext(args.dat)[0] + ".png"
        fig.savefig(out, dpi=120)
        print(out)


if __name__ == "__main__":
    main()
