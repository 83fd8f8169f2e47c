"""Figure rendering for sweep summaries and convergence traces.

Figures are written next to the delimited output; the CSVs remain the
primary, schema-stable record.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["convergence_figure", "sweep_figure"]

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.fontsize": 9,
}


def convergence_figure(trace_rows, path):
    """Objective trajectory per (scheme, sweep value, drop)."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        series = {}
        for scheme, sweep, drop, iteration, tau in trace_rows:
            series.setdefault((scheme, float(sweep), int(drop)), []).append(
                (int(iteration), float(tau))
            )
        for (scheme, sweep, drop), pts in sorted(series.items()):
            pts.sort()
            label = f"{scheme}, {sweep:g} dBm" + (f", drop {drop}" if drop else "")
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=label)
        ax.set_xlabel("outer iteration")
        ax.set_ylabel("minimum rate (nats/s/Hz)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path


def sweep_figure(summary, xlabel, path):
    """Mean minimum rate per scheme along the sweep axis."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        series = {}
        for scheme, sweep, mean, _n in summary:
            series.setdefault(scheme, []).append((float(sweep), float(mean)))
        for scheme, pts in series.items():
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", ms=4, label=scheme)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("mean minimum rate (nats/s/Hz)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
