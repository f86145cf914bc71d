"""Figure rendering for the command-line reports.

Heights are taken as log10 magnitudes at working precision *before* any
float conversion, so residuals far below the double-precision underflow
threshold still plot at their true level.  matplotlib is imported lazily
(Agg backend) and only when a figure is actually requested.
"""

from __future__ import annotations

from mpmath import mp


def _log10(x):
    """float(log10 x) at full precision, None for non-positive x."""
    x = mp.mpf(x)
    if x <= 0:
        return None
    return float(mp.log10(x))


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_residual_figure(reports, path) -> str:
    """log10 relative residual against n, one marker line per relation."""
    plt = _pyplot()
    by_relation: dict[str, list] = {}
    for r in reports:
        by_relation.setdefault(r.relation, []).append((r.n, _log10(r.relative)))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for relation in sorted(by_relation):
        pts = [(n, y) for n, y in sorted(by_relation[relation]) if y is not None]
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker=".", linewidth=0.8, label=relation)
    ax.set_xlabel("n")
    ax.set_ylabel("log10 relative residual")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_moment_figure(rows, path) -> str:
    """Dual-path moment agreement: log10 relative gap against k."""
    plt = _pyplot()
    pts = [(row["k"], _log10(row["rel_gap_value"])) for row in rows]
    pts = [(k, y) for k, y in pts if y is not None]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if pts:
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker="o", linewidth=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel("log10 relative gap")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_decay_figure(label, points, slope, intercept, path) -> str:
    """Truncation error against n on log10 axes, with the fitted power law.

    points: (n, error) pairs; slope/intercept of the ln-ln fit, or None to
    plot the data alone.
    """
    plt = _pyplot()
    xs = [float(mp.log10(mp.mpf(n))) for n, _ in points]
    ys = [_log10(e) for _, e in points]
    keep = [(x, y) for x, y in zip(xs, ys) if y is not None]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if keep:
        ax.plot([p[0] for p in keep], [p[1] for p in keep],
                "o", label=label)
    if slope is not None and keep:
        # ln err = slope*ln n + intercept  ->  log10 err is linear in log10 n
        b10 = intercept / float(mp.log(10))
        line = [(x, slope * x + b10) for x, _ in keep]
        ax.plot([p[0] for p in line], [p[1] for p in line],
                "-", linewidth=0.8, label=f"slope {slope:.3f}")
    ax.set_xlabel("log10 n")
    ax.set_ylabel("log10 error")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_density_figure(xs, sigmas, path) -> str:
    """Equilibrium density profile over its support."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot([float(x) for x in xs], [float(s) for s in sigmas], linewidth=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
