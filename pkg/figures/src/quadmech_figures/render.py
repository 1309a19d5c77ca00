"""Render static images from quadmech CSV outputs.

Display only: no numerical work beyond axis scaling.  Every renderer
validates the CSV header it consumes and fails loudly on anything
missing, empty, or truncated.  Output images are deterministic: fixed
figure size, dpi, color map, and stripped PNG metadata.
"""

import csv
import os
import tempfile
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import numpy as np
from matplotlib.figure import Figure

DPI = 120
PNG_METADATA = {"Software": "quadmech-figures"}

FIGURE_IDS = ("squeezeparam", "spectrum", "floquet", "phonon", "mandel",
              "wigner-grid")

# figure id -> CSV files it consumes (first list entry is required,
# "|" marks alternatives, "*" a glob)
_INPUTS = {
    "squeezeparam": ["squeezeparam.csv"],
    "spectrum": ["spectrum.csv"],
    "floquet": ["floquet.csv"],
    "phonon": ["evolve.csv|lindblad.csv"],
    "mandel": ["evolve.csv|lindblad.csv"],
    "wigner-grid": ["wigner_*.csv"],
}


class RenderError(Exception):
    pass


@dataclass
class FigureSpec:
    figure_id: str
    inputs: list
    output: str
    xlabel: str = ""
    ylabel: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise RenderError(f"unknown figure id {self.figure_id!r}")


def read_csv(path, columns):
    """Load named columns of a quadmech CSV; loud errors for bad files."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise RenderError(f"{path}: empty file")
            rows = list(reader)
    except OSError as exc:
        raise RenderError(f"{path}: {exc}")
    missing = [c for c in columns if c not in header]
    if missing:
        raise RenderError(f"{path}: missing columns {missing} in {header}")
    if not rows:
        raise RenderError(f"{path}: no data rows")
    idx = [header.index(c) for c in columns]
    out = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise RenderError(f"{path}: truncated row at line {lineno}")
        try:
            out.append([float(row[i]) for i in idx])
        except ValueError as exc:
            raise RenderError(f"{path}: bad value at line {lineno}: {exc}")
    return np.asarray(out)


def _new_figure(spec, width=6.0, height=4.0):
    fig = Figure(figsize=(width, height), dpi=DPI)
    ax = fig.add_subplot(111)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    return fig, ax


def _save(fig, path):
    """Atomic write: never leave a partial image behind."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fd, tmp = tempfile.mkstemp(suffix=".png",
                               dir=os.path.dirname(os.path.abspath(path)))
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", dpi=DPI, metadata=PNG_METADATA)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render_squeezeparam(spec):
    data = read_csv(spec.inputs[0], ["n", "r"])
    fig, ax = _new_figure(spec)
    ax.plot(data[:, 0], data[:, 1], color="C0")
    ax.set_xlabel(spec.xlabel or "photon number n")
    ax.set_ylabel(spec.ylabel or "squeezing parameter r(n)")
    _save(fig, spec.output)


def _render_spectrum(spec):
    data = read_csv(spec.inputs[0], ["g", "k", "n", "energy"])
    fig, ax = _new_figure(spec)
    labels = sorted({(int(k), int(n)) for k, n in data[:, 1:3]})
    for k, n in labels:
        sel = (data[:, 1] == k) & (data[:, 2] == n)
        ax.plot(data[sel, 0], data[sel, 3], lw=0.9, color=f"C{n % 10}")
    ax.set_xlabel(spec.xlabel or "coupling g")
    ax.set_ylabel(spec.ylabel or "energy")
    _save(fig, spec.output)


def _render_floquet(spec):
    data = read_csv(spec.inputs[0], ["g", "index", "quasienergy"])
    fig, ax = _new_figure(spec)
    ax.plot(data[:, 0], data[:, 2], ",", color="C0")
    ax.set_xlabel(spec.xlabel or "coupling g")
    ax.set_ylabel(spec.ylabel or "quasi-energy (folded)")
    _save(fig, spec.output)


def _series_with_fallback(spec, column):
    last_err = None
    for path in spec.inputs:
        try:
            return read_csv(path, ["t", column]), os.path.basename(path)
        except RenderError as exc:
            if not os.path.exists(path):
                last_err = exc
                continue
            raise
    raise last_err


def _render_phonon(spec):
    data, src = _series_with_fallback(spec, "phonon")
    fig, ax = _new_figure(spec)
    ax.plot(data[:, 0], data[:, 1], color="C0", label=src)
    ax.legend(frameon=False)
    ax.set_xlabel(spec.xlabel or "time")
    ax.set_ylabel(spec.ylabel or "mean phonon number")
    _save(fig, spec.output)


def _render_mandel(spec):
    data, src = _series_with_fallback(spec, "mandel_q")
    fig, ax = _new_figure(spec)
    ax.plot(data[:, 0], data[:, 1], color="C1", label=src)
    ax.legend(frameon=False)
    ax.set_xlabel(spec.xlabel or "time")
    ax.set_ylabel(spec.ylabel or "Mandel Q")
    _save(fig, spec.output)


def _render_wigner_grid(spec):
    panels = []
    for path in spec.inputs:
        data = read_csv(path, ["q", "p", "w"])
        q = np.unique(data[:, 0])
        p = np.unique(data[:, 1])
        if len(q) * len(p) != data.shape[0]:
            raise RenderError(f"{path}: not a full rectangular grid")
        W = data[:, 2].reshape(len(p), len(q))
        panels.append((os.path.basename(path), q, p, W))
    ncols = 2 if len(panels) > 1 else 1
    nrows = (len(panels) + ncols - 1) // ncols
    fig = Figure(figsize=(4.0 * ncols, 3.2 * nrows), dpi=DPI)
    vmax = max(np.max(np.abs(W)) for _, _, _, W in panels)
    for i, (name, q, p, W) in enumerate(panels):
        ax = fig.add_subplot(nrows, ncols, i + 1)
        im = ax.pcolormesh(q, p, W, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
                           shading="auto")
        ax.set_title(name, fontsize=8)
        ax.set_xlabel(spec.xlabel or "q")
        ax.set_ylabel(spec.ylabel or "p")
        fig.colorbar(im, ax=ax)
    _save(fig, spec.output)


_RENDERERS = {
    "squeezeparam": _render_squeezeparam,
    "spectrum": _render_spectrum,
    "floquet": _render_floquet,
    "phonon": _render_phonon,
    "mandel": _render_mandel,
    "wigner-grid": _render_wigner_grid,
}


def render(spec):
    """Render one figure; raises RenderError on bad input, writes no
    partial image."""
    _RENDERERS[spec.figure_id](spec)
    return spec.output


def discover(manifest_dir):
    """Figure specs for whatever CSVs exist in a run directory.

    Returns (specs, gaps): one spec per renderable figure id and the
    list of ids whose inputs are absent.
    """
    import glob as globmod
    specs = []
    gaps = []
    for fid in FIGURE_IDS:
        paths = []
        for pattern in _INPUTS[fid]:
            for alt in pattern.split("|"):
                if "*" in alt:
                    paths.extend(sorted(
                        globmod.glob(os.path.join(manifest_dir, alt))))
                else:
                    cand = os.path.join(manifest_dir, alt)
                    if os.path.exists(cand):
                        paths.append(cand)
        if not paths:
            gaps.append(fid)
            continue
        specs.append(FigureSpec(figure_id=fid, inputs=paths,
                                output=f"{fid}.png"))
    return specs, gaps


def render_all(manifest_dir, out_dir, workers=4):
    """Render every figure whose inputs exist; write an index file.

    Returns (rendered ids, gaps).  Any malformed input aborts with
    RenderError after the parallel batch finishes.
    """
    from concurrent.futures import ProcessPoolExecutor

    specs, gaps = discover(manifest_dir)
    for spec in specs:
        spec.output = os.path.join(out_dir, f"{spec.figure_id}.png")
    os.makedirs(out_dir, exist_ok=True)
    errors = []
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(s, pool.submit(render, s)) for s in specs]
            for s, fut in futures:
                exc = fut.exception()
                if exc is not None:
                    errors.append(f"{s.figure_id}: {exc}")
    else:
        for s in specs:
            try:
                render(s)
            except RenderError as exc:
                errors.append(f"{s.figure_id}: {exc}")
    if errors:
        raise RenderError("; ".join(errors))
    rendered = [s.figure_id for s in specs]
    index = os.path.join(out_dir, "index.txt")
    with open(index, "w") as fh:
        for fid in rendered:
            fh.write(f"rendered {fid}.png\n")
        for fid in gaps:
            fh.write(f"missing-input {fid}\n")
    return rendered, gaps
