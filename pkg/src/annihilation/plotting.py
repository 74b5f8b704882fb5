"""Static SVG figures drawn from the CSV/text artifacts the CLI writes.

Every figure is a function of files on disk only, so re-plotting never
re-runs the solver.
"""

from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "svg.hashsalt": "annihilation",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}
_SVG_METADATA = {"Date": None, "Creator": None}


def read_columns(path) -> dict[str, np.ndarray]:
    """Read a headed CSV into float columns; empty cells become NaN."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) if x != "" else math.nan for x in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def read_keyvalue(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    return out


def plot_density_and_fit(trajectory_csv, out_svg, fit_txt=None):
    """Density on a log axis with the tail fit above, fit error below."""
    cols = read_columns(trajectory_csv)
    t, a = cols["t"], cols["a"]
    fit = read_keyvalue(fit_txt) if fit_txt is not None else None

    with plt.rc_context(_RC):
        if fit is None:
            fig, top = plt.subplots(figsize=(6.0, 3.2))
            bottom = None
        else:
            fig, (top, bottom) = plt.subplots(
                2, 1, figsize=(6.0, 5.5), gridspec_kw={"height_ratios": [2, 1]}
            )
        top.semilogy(t, a, color="C0", label="a(t)")
        if fit is not None:
            amp, shift, expo = (float(fit[k]) for k in ("amplitude", "shift", "exponent"))
            lo, hi = float(fit["window_lo"]), float(fit["window_hi"])
            mask = (t >= lo) & (t <= hi)
            model = amp / (t[mask] - shift) ** expo
            top.semilogy(t[mask], model, "--", color="C3",
                         label=f"{amp:.5g}/(t-{shift:.5g})^{expo:.4g}")
            bottom.plot(t[mask], np.log10(a[mask]) - np.log10(model), color="C3")
            bottom.set_xlabel("t")
            bottom.set_ylabel("log10 a - log10 fit")
            bottom.ticklabel_format(axis="y", style="sci", scilimits=(-2, 2))
        else:
            top.set_xlabel("t")
        top.set_ylabel("a(t)")
        top.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(out_svg, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)


def plot_orders(order_csv, out_svg, labels=None):
    """Observed order p(t) per step triple; NaN samples are left as gaps."""
    cols = read_columns(order_csv)
    t = cols.pop("t")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        for j, (name, p) in enumerate(cols.items()):
            label = labels[j] if labels is not None else name
            ax.plot(t, p, label=label)
        ax.set_xlabel("t")
        ax.set_ylabel("p(t)")
        finite = np.concatenate([p[np.isfinite(p)] for p in cols.values()] or [np.zeros(0)])
        if finite.size:
            lo, hi = np.percentile(finite, [1, 99])
            pad = 0.1 * max(hi - lo, 0.1)
            ax.set_ylim(lo - pad, hi + pad)
        ax.legend(loc="best", fontsize=7)
        fig.tight_layout()
        fig.savefig(out_svg, format="svg", metadata=_SVG_METADATA)
        plt.close(fig)
