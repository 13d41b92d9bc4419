"""Example post-processing: plot mean completion time against rho from a sweep CSV.

    python scripts/plot_sweep.py sweep.csv sweep.png
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(csv_path, png_path):
    df = pd.read_csv(csv_path)
    agg = df.groupby(["policy", "rho"])["mean_completion_time"].agg(["mean", "sem"]).reset_index()
    fig, ax = plt.subplots(figsize=(6, 4))
    for policy, g in agg.groupby("policy"):
        ax.errorbar(g["rho"], g["mean"], yerr=g["sem"].fillna(0), marker="o", capsize=3, label=policy)
    ax.set_xlabel("load (fraction of capacity)")
    ax.set_ylabel("mean completion time (slots)")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)


if __name__ == "__main__":
    main(*sys.argv[1:3])
