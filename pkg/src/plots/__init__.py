"""Figure scripts rendering publication-style panels from simulation CSVs.

A figure is described by a small JSON document (`FigureSpec`) that names the
input CSV files, the panel kind, and axis options.  Each panel kind consumes
the documented CSV schema written by the `skinsim` CLI:

    curves-vs-tOverL              series.csv       scalar curves vs t/L
    density-heatmap               density.csv      n_l over (site, t/L)
    phase-heatmap-with-boundary   phase.csv        S(t/L, W) + transition line
    scaling-inset                 scaling CSV      S vs L on a log axis + fits
    correlation-decay             correlation.csv  |C(l)|^2 vs chord distance
    spectrum-scatter              spectrum.csv     Liouvillian eigenvalues

Rendering is read-only over the inputs and deterministic: the same spec and
the same CSVs produce byte-identical images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np

PANEL_KINDS = (
    "curves-vs-tOverL",
    "density-heatmap",
    "phase-heatmap-with-boundary",
    "scaling-inset",
    "correlation-decay",
    "spectrum-scatter",
)


class PlotError(ValueError):
    """Invalid figure spec or unusable input CSV."""


@dataclass
class FigureSpec:
    """One panel: input CSVs, panel kind, and axis/label options."""

    kind: str
    inputs: list[dict]
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise PlotError(
                f"unknown panel kind {self.kind!r}; expected one of {PANEL_KINDS}")
        if not self.inputs:
            raise PlotError("figure spec lists no input CSVs")
        for entry in self.inputs:
            if "path" not in entry:
                raise PlotError("every input entry needs a 'path'")


def load_figure_spec(path) -> FigureSpec:
    """Parse a figure-spec JSON file; relative input paths resolve against it."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PlotError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise PlotError(f"{path}: figure spec must be a JSON object")
    kind = doc.get("kind")
    if kind is None:
        raise PlotError(f"{path}: missing 'kind'")
    inputs = doc.get("inputs")
    if not isinstance(inputs, list):
        raise PlotError(f"{path}: 'inputs' must be a list of {{path, label}} entries")
    inputs = [dict(entry) for entry in inputs]
    for entry in inputs:
        p = Path(str(entry.get("path", "")))
        if not p.is_absolute():
            entry["path"] = str((path.parent / p).resolve())
    options = {k: v for k, v in doc.items() if k not in ("kind", "inputs")}
    return FigureSpec(kind=str(kind), inputs=inputs, options=options)


def read_csv(path):
    """Load a CSV written by the simulator CLI: (header list, float matrix)."""
    path = Path(path)
    if not path.exists():
        raise PlotError(f"input CSV not found: {path}")
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    if len(lines) == 1:
        return header, np.empty((0, len(header)))
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, data


def column(header, data, name, path) -> np.ndarray:
    """One named column; the error names both the column and the file."""
    if name not in header:
        raise PlotError(f"column {name!r} not found in {path} "
                        f"(available: {', '.join(header)})")
    return data[:, header.index(name)]


def render(spec: FigureSpec, out_path) -> Path:
    """Render one panel to `out_path` (format from the file extension)."""
    from plots import panels

    fig = panels.build(spec)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return out_path
