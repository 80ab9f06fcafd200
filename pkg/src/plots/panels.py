"""Panel renderers: one function per panel kind, all returning a Figure."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import matplotlib.pyplot as plt

from plots import FigureSpec, PlotError, column, read_csv


def _labels(ax, options, xlabel, ylabel):
    ax.set_xlabel(options.get("xlabel", xlabel))
    ax.set_ylabel(options.get("ylabel", ylabel))
    if "title" in options:
        ax.set_title(options["title"])


def curves_vs_t_over_l(spec: FigureSpec):
    """Scalar observable curves vs t/L, one line per input series.csv."""
    opts = spec.options
    xcol = opts.get("x", "t_over_L")
    ycol = opts.get("y", "S_half_mean")
    ecol = opts.get("yerr")
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for entry in spec.inputs:
        header, data = read_csv(entry["path"])
        x = column(header, data, xcol, entry["path"])
        y = column(header, data, ycol, entry["path"])
        label = entry.get("label")
        if ecol is not None:
            err = column(header, data, ecol, entry["path"])
            ax.errorbar(x, y, yerr=err, lw=1.2, elinewidth=0.6,
                        errorevery=max(1, len(x) // 25), label=label)
        else:
            ax.plot(x, y, lw=1.2, label=label)
    if "marker_x" in opts:
        ax.axvline(float(opts["marker_x"]), color="k", ls=":", lw=1.0)
    if opts.get("logx"):
        ax.set_xscale("log")
    if opts.get("logy"):
        ax.set_yscale("log")
    _labels(ax, opts, xcol, ycol)
    if any("label" in e for e in spec.inputs):
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def density_heatmap(spec: FigureSpec):
    """Site-resolved density n_l(t) from a single density.csv."""
    entry = spec.inputs[0]
    header, data = read_csv(entry["path"])
    t_over_L = column(header, data, "t_over_L", entry["path"])
    sites = [name for name in header if name.startswith("n_")]
    if not sites:
        raise PlotError(f"no density columns n_1..n_L found in {entry['path']}")
    profile = np.column_stack(
        [column(header, data, name, entry["path"]) for name in sites])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    im = ax.imshow(profile, aspect="auto", origin="lower",
                   extent=(0.5, len(sites) + 0.5, t_over_L[0], t_over_L[-1]),
                   cmap=spec.options.get("cmap", "viridis"), vmin=0.0, vmax=1.0)
    fig.colorbar(im, ax=ax, label=r"$\langle n_l \rangle$")
    _labels(ax, spec.options, r"site $l$", r"$t/L$")
    fig.tight_layout()
    return fig


def _parse_w(name: str) -> float:
    # phase.csv columns are S_half_W<value> with '.' spelled 'p'
    return float(name.removeprefix("S_half_W").replace("p", "."))


def phase_heatmap_with_boundary(spec: FigureSpec):
    """Entropy heatmap over (W, t/L) with the transition line overlaid."""
    entry = spec.inputs[0]
    header, data = read_csv(entry["path"])
    t_over_L = column(header, data, "t_over_L", entry["path"])
    w_cols = [name for name in header if name.startswith("S_half_W")]
    if not w_cols:
        raise PlotError(f"no S_half_W* columns found in {entry['path']}")
    W = np.array([_parse_w(name) for name in w_cols])
    grid = np.column_stack(
        [column(header, data, name, entry["path"]) for name in w_cols])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    im = ax.pcolormesh(W, t_over_L, grid,
                       cmap=spec.options.get("cmap", "magma"), shading="nearest")
    fig.colorbar(im, ax=ax, label=r"$S_{L/2}$")

    boundary = spec.options.get("boundary")
    if boundary is None and "fits" in spec.options:
        fits_path = Path(spec.inputs[0]["path"]).parent / spec.options["fits"]
        fits = json.loads(Path(fits_path).read_text())
        boundary = {"W": fits["W_values"], "t_c_over_L": fits["t_c_over_L"]}
    if boundary is not None:
        bw = np.asarray(boundary["W"], dtype=float)
        btc = np.array([np.nan if tc is None else float(tc)
                        for tc in boundary["t_c_over_L"]])
        keep = np.isfinite(btc)
        ax.plot(bw[keep], btc[keep], "k-o", lw=1.5, ms=3,
                label=r"$t_c/L$")
        ax.legend(frameon=False, fontsize=8, loc="upper left")
    _labels(ax, spec.options, r"$W$", r"$t/L$")
    fig.tight_layout()
    return fig


def scaling_inset(spec: FigureSpec):
    """S vs L on a logarithmic L axis with fitted a*ln(L)+b dashed lines."""
    entry = spec.inputs[0]
    header, data = read_csv(entry["path"])
    L = column(header, data, "L", entry["path"])
    y_cols = spec.options.get("y")
    if y_cols is None:
        y_cols = [name for name in header if name != "L"]
    elif isinstance(y_cols, str):
        y_cols = [y_cols]
    if not y_cols:
        raise PlotError(f"no observable columns besides L in {entry['path']}")
    fig, ax = plt.subplots(figsize=(3.6, 3.0))
    dense = np.geomspace(L.min(), L.max(), 64)
    for name in y_cols:
        y = column(header, data, name, entry["path"])
        a, b = np.polyfit(np.log(L), y, 1)
        (line,) = ax.semilogx(L, y, "o", ms=4, label=name)
        ax.semilogx(dense, a * np.log(dense) + b, "--", lw=1.0,
                    color=line.get_color())
    _labels(ax, spec.options, r"$L$", r"$S_{L/2}$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def correlation_decay(spec: FigureSpec):
    """|C(l)|^2 vs chord distance, side by side on log-log and semi-log axes.

    Each input is a correlation.csv; the row nearest the requested t/L is
    plotted.  The abscissa is the chord distance (L/pi) sin(pi l / L), with
    L inferred from the number of C_l columns (l runs over 1..L/2).
    """
    target = float(spec.options.get("t_over_L", 0.4))
    fig, (ax_log, ax_semi) = plt.subplots(1, 2, figsize=(7.2, 3.2))
    for entry in spec.inputs:
        header, data = read_csv(entry["path"])
        t_over_L = column(header, data, "t_over_L", entry["path"])
        c_cols = [name for name in header if name.startswith("C_")]
        if not c_cols:
            raise PlotError(f"no correlation columns C_1..C_{{L/2}} found "
                            f"in {entry['path']}")
        row = int(np.argmin(np.abs(t_over_L - target)))
        C = np.array([column(header, data, name, entry["path"])[row]
                      for name in c_cols])
        L = 2 * len(c_cols)
        l = np.arange(1, len(c_cols) + 1)
        chord = (L / np.pi) * np.sin(np.pi * l / L)
        label = entry.get("label")
        ax_log.loglog(chord, C, "o-", ms=3, lw=0.8, label=label)
        ax_semi.semilogy(chord, C, "o-", ms=3, lw=0.8, label=label)
    for ax in (ax_log, ax_semi):
        _labels(ax, spec.options, r"$(L/\pi)\sin(\pi l/L)$", r"$C(l)$")
        if any("label" in e for e in spec.inputs):
            ax.legend(frameon=False, fontsize=8)
    fig.suptitle(spec.options.get("title", f"t/L = {target:g}"), fontsize=10)
    fig.tight_layout()
    return fig


def spectrum_scatter(spec: FigureSpec):
    """Liouvillian eigenvalues in the complex plane from spectrum.csv."""
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    for entry in spec.inputs:
        header, data = read_csv(entry["path"])
        re = column(header, data, "re_lambda", entry["path"])
        im = column(header, data, "im_lambda", entry["path"])
        ax.scatter(re, im, s=6, alpha=0.7, label=entry.get("label"))
    ax.axvline(0.0, color="k", lw=0.6)
    _labels(ax, spec.options, r"$\mathrm{Re}\,\lambda$", r"$\mathrm{Im}\,\lambda$")
    if any("label" in e for e in spec.inputs):
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


_RENDERERS = {
    "curves-vs-tOverL": curves_vs_t_over_l,
    "density-heatmap": density_heatmap,
    "phase-heatmap-with-boundary": phase_heatmap_with_boundary,
    "scaling-inset": scaling_inset,
    "correlation-decay": correlation_decay,
    "spectrum-scatter": spectrum_scatter,
}


def build(spec: FigureSpec):
    """Dispatch to the renderer for `spec.kind`."""
    return _RENDERERS[spec.kind](spec)
