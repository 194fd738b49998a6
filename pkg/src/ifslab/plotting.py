"""PNG figures for the CLI report paths (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def _family_image(members) -> np.ndarray:
    img = np.zeros(members[0].cells.shape, dtype=float)
    for k, K in enumerate(members, start=1):
        img[K.cells] = k
    return np.ma.masked_equal(img, 0)


def family_figure(members, path, title="") -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    if members:
        ax.imshow(_family_image(members).T, origin="lower", cmap="viridis",
                  extent=(0, 1, 0, 1), interpolation="nearest")
    ax.set_xlabel("x")
    ax.set_ylabel("y (frame)")
    ax.set_title(title)
    return _save(fig, path)


def coverage_map_figure(report, path, title="") -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    hit = np.ma.masked_less(report.first_hit.astype(float), 0)
    im = ax.imshow(hit.T, origin="lower", cmap="magma", extent=(0, 1, 0, 1),
                   interpolation="nearest")
    fig.colorbar(im, ax=ax, label="first word length")
    ax.plot(*report.start, "c+", ms=10)
    ax.set_title(title or f"coverage {report.fraction:.3f}")
    return _save(fig, path)


def coverage_curve_figure(reports: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rep in reports.items():
        ax.plot(np.arange(len(rep.fractions)), rep.fractions, label=name)
    ax.set_xlabel("word length")
    ax.set_ylabel("fraction of cells covered")
    ax.set_ylim(0, 1.02)
    ax.legend()
    return _save(fig, path)


def coverage_figures(report, outdir) -> list[Path]:
    out = Path(outdir)
    return [coverage_map_figure(report, out / "coverage_map.png"),
            coverage_curve_figure({"IFS(f, g)": report}, out / "coverage_curve.png")]


def separation_figures(outcome, outdir) -> list[Path]:
    out = Path(outdir)
    paths = []
    fams = (("family_f", outcome.family_f, "circles of f"),
            ("family_g", outcome.family_g, "circles of g"),
            ("family_hg", outcome.family_hg, "h(circles of g)"))
    for stem, members, title in fams:
        if members:
            paths.append(family_figure(members, out / f"{stem}.png", title))
    paths.append(coverage_map_figure(outcome.coverage_before, out / "coverage_before.png",
                                     "IFS(f, g)"))
    paths.append(coverage_map_figure(outcome.coverage_after, out / "coverage_after.png",
                                     "IFS(f, hgh^-1)"))
    paths.append(coverage_curve_figure({"IFS(f, g)": outcome.coverage_before,
                                        "IFS(f, hgh^-1)": outcome.coverage_after},
                                       out / "coverage_curves.png"))
    return paths


def frontier_figure(K, decomposition, path) -> Path:
    img = np.zeros(K.cells.shape)
    if decomposition is not None:
        img[decomposition.lower] = 1
        img[decomposition.upper] = 2
    img[K.cells] = 3
    if decomposition is not None:
        img[decomposition.frontier.cells] = 4
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(img.T, origin="lower", cmap="tab10", vmin=0, vmax=9, extent=(0, 1, 0, 1),
              interpolation="nearest")
    ax.set_title("U-, U+, K and frontier")
    return _save(fig, path)


def loglog_figure(estimate, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    inv = 1.0 / np.asarray(estimate.scales)
    ax.loglog(inv, estimate.counts, "o-", base=2)
    ax.set_xlabel("1 / side")
    ax.set_ylabel("occupied boxes")
    ax.set_title(f"slope {estimate.slope:.3f} +- {estimate.slope_ci:.3f}")
    return _save(fig, path)
