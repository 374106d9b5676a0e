"""Figure construction for the four idslab output kinds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from idslab_plot import schemas

# deterministic SVG output: fixed hash salt, no creation date
plt.rcParams["svg.hashsalt"] = "idslab-plot"

FIG_WIDTH = 6.0
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

KINDS = ("ids", "bands", "wegner", "exhaustion")


@dataclass(frozen=True)
class FigureJob:
    kind: str
    inputs: tuple[str, ...]
    output: str
    fit_report: str | None = None
    style: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        for path in self.inputs:
            if not Path(path).exists():
                raise FileNotFoundError(f"input {path} does not exist")


def _new_axes(style: dict):
    width = float(style.get("width", FIG_WIDTH))
    fig, ax = plt.subplots(figsize=(width, width * GOLDEN))
    ax.grid(True, alpha=0.3)
    return fig, ax


def _ids_figure(job: FigureJob):
    fig, ax = _new_axes(job.style)
    annotated = False
    for path in job.inputs:
        rows = schemas.read_csv(path, schemas.IDS_HEADER)
        groups: dict[tuple, list[dict]] = {}
        for row in rows:
            groups.setdefault((row["model"], row["box_L"]), []).append(row)
        for (model, box_length), block in sorted(groups.items()):
            block.sort(key=lambda r: r["E"])
            energy = np.array([r["E"] for r in block])
            value = np.array([r["N_mean"] for r in block])
            err = np.array([r["N_stderr"] for r in block])
            (line,) = ax.plot(
                energy, value, drawstyle="steps-post", label=f"{model}, L={box_length}"
            )
            if np.any(err > 0):
                ax.fill_between(
                    energy,
                    value - 2 * err,
                    value + 2 * err,
                    step="post",
                    alpha=0.25,
                    color=line.get_color(),
                )
            if not annotated and len(value) > 1:
                jumps = np.diff(value)
                at = int(np.argmax(jumps))
                if jumps[at] > 0:
                    ax.annotate(
                        f"step {jumps[at]:.4f}",
                        xy=(energy[at + 1], 0.5 * (value[at] + value[at + 1])),
                        xytext=(8, 0),
                        textcoords="offset points",
                        fontsize=8,
                    )
                    annotated = True
    ax.set_xlabel("energy")
    ax.set_ylabel("integrated density of states")
    ax.legend(fontsize=8)
    return fig


def _bands_figure(job: FigureJob):
    fig, ax = _new_axes(job.style)
    for path in job.inputs:
        header, rows = schemas.read_bands_csv(path)
        dimension = sum(1 for c in header if c.startswith("theta_"))
        data = np.array(rows)
        thetas = data[:, :dimension]
        bands = data[:, dimension:]
        order = np.argsort(thetas[:, 0], kind="stable")
        for n in range(bands.shape[1]):
            ax.plot(thetas[order, 0], bands[order, n], label=f"band {n + 1}")
    ax.set_xlabel("phase theta_1")
    ax.set_ylabel("band energy")
    ax.legend(fontsize=8)
    return fig


def _wegner_figure(job: FigureJob):
    fig, ax = _new_axes(job.style)
    fits = {}
    target = None
    if job.fit_report:
        payload = json.loads(Path(job.fit_report).read_text(encoding="utf-8"))
        fits = payload.get("fits", {})
        target = payload.get("p")
    for path in job.inputs:
        rows = schemas.read_csv(path, schemas.WEGNER_HEADER)
        groups: dict[tuple, list[dict]] = {}
        for row in rows:
            groups.setdefault((row["E"], row["box_L"]), []).append(row)
        for (energy, box_length), block in sorted(groups.items()):
            block.sort(key=lambda r: r["eps"])
            eps = np.array([r["eps"] for r in block])
            mean = np.array([r["mean"] for r in block])
            err = np.array([r["stderr"] for r in block])
            ax.errorbar(
                eps, mean, yerr=2 * err, marker="o", linestyle="none",
                label=f"E={energy}, L={box_length}",
            )
            key = f"eps_scaling_E{energy}_L{box_length}"
            fit = fits.get(key)
            if fit and fit.get("slope") is not None and not fit.get("note"):
                slope = fit["slope"]
                intercept = fit["intercept"]
                line = np.exp(intercept) * eps**slope
                ax.plot(eps, line, "--", label=f"fit slope {slope!r}")
            if fit and target:
                reference = mean[-1] * (eps / eps[-1]) ** (1.0 / target)
                ax.plot(eps, reference, ":", alpha=0.6, label=f"slope 1/p = {1.0 / target}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("window half-width eps")
    ax.set_ylabel("mean window count")
    ax.legend(fontsize=7)
    return fig


def _exhaustion_figure(job: FigureJob):
    fig, ax = _new_axes(job.style)
    for path in job.inputs:
        rows = schemas.read_csv(path, schemas.EXHAUSTION_HEADER)
        groups: dict[float, list[dict]] = {}
        for row in rows:
            groups.setdefault(row["E"], []).append(row)
        for energy, block in sorted(groups.items()):
            block.sort(key=lambda r: r["box_L"])
            length = np.array([r["box_L"] for r in block])
            dev = np.array([r["abs_dev"] for r in block])
            if np.all(np.isnan(dev)):
                value = np.array([r["N_mean"] for r in block])
                ax.plot(length, value, marker="o", label=f"N(E={energy})")
                continue
            ax.loglog(length, np.maximum(dev, 1e-17), marker="o", label=f"|dev| at E={energy}")
            ax.loglog(length, 2.0 / length, "--", alpha=0.6, label="2/L guide")
    ax.set_xlabel("box length L")
    ax.set_ylabel("deviation from phase average")
    ax.legend(fontsize=8)
    return fig


_BUILDERS = {
    "ids": _ids_figure,
    "bands": _bands_figure,
    "wegner": _wegner_figure,
    "exhaustion": _exhaustion_figure,
}


def build_figure(job: FigureJob):
    """Construct the matplotlib figure for a job without writing it."""
    return _BUILDERS[job.kind](job)


def render(job: FigureJob) -> Path:
    """Render a job to its output path (SVG or PNG); inputs are read-only."""
    fig = build_figure(job)
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    suffix = out.suffix.lower()
    if suffix not in (".svg", ".png"):
        plt.close(fig)
        raise ValueError(f"unsupported output format {suffix!r}; use .svg or .png")
    metadata = {"Date": None} if suffix == ".svg" else None
    fig.savefig(out, metadata=metadata, dpi=int(job.style.get("dpi", 150)))
    plt.close(fig)
    return out
