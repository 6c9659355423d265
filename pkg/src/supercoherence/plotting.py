"""Static SVG figures for traces, curves and phase maps.

Plotting never fails a data run: problems are reported as warnings and no
file is written.
"""

from __future__ import annotations

import io
import warnings

import numpy as np

from ._io import atomic_write_text


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    buf = io.StringIO()
    fig.savefig(buf, format="svg")
    atomic_write_text(path, buf.getvalue())


def line_plot(path, x, ys, xlabel, ylabel, labels=None, vline=None, title=None, logy=False):
    """One or more curves sharing an x axis; ``vline`` marks e.g. sigma_c."""
    try:
        x = np.asarray(x, dtype=float)
        ys = [np.asarray(y, dtype=float) for y in (ys if isinstance(ys, (list, tuple)) else [ys])]
        if x.size == 0 or not ys or all(y.size == 0 for y in ys):
            warnings.warn("nothing to plot; no SVG written", RuntimeWarning, stacklevel=2)
            return False
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(6, 4))
        for k, y in enumerate(ys):
            label = labels[k] if labels else None
            ax.plot(x, y, marker="o" if x.size < 60 else None, ms=3, lw=1.2, label=label)
        if vline is not None:
            ax.axvline(vline, color="0.4", ls="--", lw=1, label=f"critical {vline:.4g}")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if labels or vline is not None:
            ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)
        return True
    except Exception as exc:  # plotting must not fail the run
        warnings.warn(f"SVG output failed: {exc}", RuntimeWarning, stacklevel=2)
        return False


def heatmap(path, xs, ys, values, xlabel, ylabel, clabel, vmin=0.0, vmax=1.0):
    """Rectangular heatmap with values[i, j] at (xs[j], ys[i])."""
    try:
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            warnings.warn("nothing to plot; no SVG written", RuntimeWarning, stacklevel=2)
            return False
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(6, 4.5))
        mesh = ax.pcolormesh(_edges(xs), _edges(ys), values, vmin=vmin, vmax=vmax, cmap="viridis", shading="flat")
        fig.colorbar(mesh, ax=ax, label=clabel)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)
        return True
    except Exception as exc:
        warnings.warn(f"SVG output failed: {exc}", RuntimeWarning, stacklevel=2)
        return False


def _edges(centers):
    c = np.asarray(centers, dtype=float)
    if c.size == 1:
        return np.array([c[0] - 0.5, c[0] + 0.5])
    mid = 0.5 * (c[1:] + c[:-1])
    return np.concatenate([[2 * c[0] - mid[0]], mid, [2 * c[-1] - mid[-1]]])


def sweep_svg(path, result):
    """Pick the plot that matches the sweep kind."""
    from .sweep import Kind

    job = result.job
    rows = result.rows
    if not rows:
        warnings.warn("empty sweep result; no SVG written", RuntimeWarning, stacklevel=2)
        return False
    if job.kind is Kind.PHASE_MAP:
        sig = np.array(job.sigmas)
        th = np.array(job.theta0s)
        grid = result.values("eta_bar").reshape(th.size, sig.size)
        return heatmap(path, sig, th, np.nan_to_num(grid), "disorder sigma (J)", "initial angle theta0 (rad)",
                       "time-averaged coherence")
    x = result.values("sigma")
    sigma_c = None
    prov = result.provenance.get("sigma_c")
    if prov:
        sigma_c = next(iter(prov.values()))
    if job.kind is Kind.PERIOD:
        return line_plot(path, x, result.values("period"), "disorder sigma (J)", "period T (1/J)")
    if job.kind is Kind.GAP:
        ys, labels = [result.values("e_gap"), result.values("rel_coherence")], ["gap (J)", "relative coherence"]
        if "e_gap_analytic" in rows[0]:
            ys += [result.values("e_gap_analytic"), result.values("rel_coherence_analytic")]
            labels += ["gap, analytic", "coherence, analytic"]
        return line_plot(path, x, ys, "disorder sigma (J)", "value", labels)
    if job.kind is Kind.NETWORK_SCAN:
        idx = np.arange(len(rows))
        return line_plot(path, idx, [result.values("rel_coherence"), result.values("gap_present")],
                         "network index", "value", ["relative coherence", "gap fraction"])
    return line_plot(path, x, result.values("eta_bar"), "disorder sigma (J)", "time-averaged coherence",
                     vline=sigma_c)
