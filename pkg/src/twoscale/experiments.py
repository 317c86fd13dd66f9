"""Experiment harness: reproducible runs behind every figure-style protocol.

Each experiment is fully determined by its spec (id, overrides, seed list):
run CSVs, a summary CSV, and SVG plots land in the output directory and are
byte-identical across reruns.  The staircase demo target, the per-regime
stepsize schedules, and the certified-initialization sampler live here so
the test suite and the command line share one source of truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import oracles, quadratic, svgplot
from .activation import Activation, heaviside, relu, smooth_sigmoid
from .dynamics import FlowConfig, integrate_full_flow, integrate_limit_reduced, integrate_limit_smooth
from .initialization import sample_init
from .network import AdditiveNetworkState, NetworkState, forward
from .records import RunRecord
from .sgd import SgdConfig, train
from .targets import AdditiveTarget, ClassParams, PiecewiseConstantTarget, ReluAffineTarget

__all__ = [
    "ConfigError",
    "ExperimentError",
    "ExperimentSpec",
    "run_experiment",
    "demo_target",
    "demo_axis_target",
    "demo_relu_target",
    "counterexample_target",
    "sample_certified_init",
    "sweep_schedule",
    "EPS_GRID",
    "REFERENCE_SEED",
    "EXPERIMENT_IDS",
]


class ConfigError(ValueError):
    """Invalid experiment id, override, or config file."""


class ExperimentError(RuntimeError):
    """An experiment run failed (divergence, aborted integration, ...)."""


# Demo staircase: 1 on [0,.2], 4 on [.2,.35], 1 on [.35,.5], 2 on [.5,.65],
# 1 on [.65,.8], 4 on [.8,1].  Class constants: 6 pieces, min length 0.15,
# min jump 1, sup norm 4.
def demo_target() -> PiecewiseConstantTarget:
    return PiecewiseConstantTarget(
        np.array([0.0, 0.2, 0.35, 0.5, 0.65, 0.8, 1.0]),
        np.array([1.0, 4.0, 1.0, 2.0, 1.0, 4.0]),
    )


def demo_class_params() -> ClassParams:
    return ClassParams(n=6, min_piece=0.15, min_jump=1.0, sup_bound=4.0)


def demo_axis_target() -> PiecewiseConstantTarget:
    """Per-axis staircase of the multivariate demo: steps at .3, .5, .7."""
    return PiecewiseConstantTarget(np.array([0.0, 0.3, 0.5, 0.7, 1.0]), np.array([0.0, 1.0, 2.0, 3.0]))


def demo_relu_target() -> ReluAffineTarget:
    return ReluAffineTarget(np.array([0.3, 0.5, 0.7]), np.array([1.0, -2.0, 3.0]))


def counterexample_target() -> PiecewiseConstantTarget:
    """Three equal pieces at levels 1, -1, 0; the rightmost piece averages
    the rest of the target to zero, so weights (and motion) vanish when all
    neurons start there."""
    return PiecewiseConstantTarget(np.array([0.0, 1 / 3, 2 / 3, 1.0]), np.array([1.0, -1.0, 0.0]))


REFERENCE_SEED = 0
DEMO_ETA = 4e-3
DEMO_M = 20
EPS_GRID = (2e-5, 2e-4, 2e-3, 2e-2, 1e-1, 1.0)

# Desk-scale certificate thresholds: spacing clears twice the window width
# of the demo sharpness with margin, and flank asymmetry keeps the late
# flank clear of its absorbed partner.
CERT_GAP = 1e-2
CERT_ASYM = 2e-2


def sample_certified_init(
    m: int,
    target: PiecewiseConstantTarget,
    rng: np.random.Generator,
    gap: float = CERT_GAP,
    asym: float = CERT_ASYM,
    min_per_piece: int = 2,
    max_tries: int = 200_000,
):
    """Uniform positions conditioned on the desk-scale recovery certificate:
    at least ``min_per_piece`` neurons strictly inside every piece, pairwise
    spacing at least ``gap``, and flank asymmetry at least ``asym`` around
    every discontinuity.  Weights start at zero."""
    bp = target.breakpoints
    interior = target.interior_breakpoints
    for _ in range(max_tries):
        u = rng.random(m)
        if quadratic.min_gap(u, 0.0) < gap:
            continue
        us = np.sort(u)
        counts = np.searchsorted(us, bp[1:], side="left") - np.searchsorted(us, bp[:-1], side="right")
        if np.any(counts < min_per_piece):
            continue
        ok = True
        for v in interior:
            k = int(np.searchsorted(us, v))
            if k == 0 or k == us.size or abs(us[k] + us[k - 1] - 2.0 * v) < asym:
                ok = False
                break
        if ok:
            return np.zeros(m + 1), u
    raise ExperimentError(f"no certified initialization found in {max_tries} draws")


def sweep_schedule(eps: float):
    """Stepsize and budget for one sweep point.

    Small ratios need the slow-time budget tau = eps*h*P = 0.036 of the
    reference run; large ratios converge jointly in flow time.  The stepsize
    shrinks with the ratio so the position updates stay sane.
    """
    if eps <= 2e-2:
        h = 1e-4
        steps = max(round(0.036 / (eps * h)), round(400.0 / h))
    else:
        h = 1e-5
        steps = max(round(0.036 / (eps * h)), round(20.0 / h))
    return h, int(steps)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: experiment id, config overrides, output directory, and
    the seed list (non-empty)."""

    experiment_id: str
    outdir: Path
    seeds: tuple = (REFERENCE_SEED,)
    overrides: dict = field(default_factory=dict)
    faithful: bool = False

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise ConfigError(
                f"unknown experiment {self.experiment_id!r}; known: {', '.join(EXPERIMENT_IDS)}"
            )
        if len(self.seeds) == 0:
            raise ConfigError("seed list must be non-empty")
        object.__setattr__(self, "outdir", Path(self.outdir))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


def _apply_overrides(cfg, overrides: dict, allowed: set):
    unknown = set(overrides) - allowed
    if unknown:
        raise ConfigError(f"invalid overrides: {sorted(unknown)}; allowed: {sorted(allowed)}")
    fields_here = {k: v for k, v in overrides.items() if hasattr(cfg, k)}
    try:
        return replace(cfg, **fields_here)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad override value: {exc}") from exc


def _write_summary(path: Path, header: list, rows: list):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            cells.append(f"{v:.17g}" if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _summary_rows(seed, record: RunRecord):
    return [seed, record.final_loss, 2.0 * record.final_loss, *map(float, record.final_alignment)]


def _align_header(n_align: int):
    return ["seed", "final_loss", "final_sq_l2", *[f"align{i + 1}" for i in range(n_align)]]


# ---------------------------------------------------------------------------
# Individual experiments


def _sgd_demo_config(spec: ExperimentSpec) -> SgdConfig:
    if spec.faithful:
        cfg = SgdConfig(h=1e-5, epsilon=2e-5, steps=180_000_000, noise="uniform", eval_every=1_800_000)
    else:
        cfg = SgdConfig(h=1e-3, epsilon=2e-5, steps=1_800_000, noise="uniform", eval_every=18_000)
    return _apply_overrides(cfg, spec.overrides, {"h", "epsilon", "steps", "noise", "eval_every", "batch_size"})


def _run_fig2(spec: ExperimentSpec) -> list:
    """Loss of SGD against the reduced limit on matched slow time."""
    target = demo_target()
    act = smooth_sigmoid(DEMO_ETA)
    cfg0 = _sgd_demo_config(spec)
    out = []
    rows = []
    for seed in spec.seeds:
        rng = np.random.default_rng(seed)
        a0, u0 = sample_certified_init(DEMO_M, target, rng)
        cfg = replace(cfg0, seed=seed)
        record = train(NetworkState(a0, u0), target, act, cfg)
        tau_end = cfg.epsilon * cfg.h * cfg.steps
        limit = integrate_limit_reduced(
            u0, target, FlowConfig(dt=tau_end / 2000.0, t_end=tau_end, record_every=20)
        )
        run_path = spec.outdir / f"run_{seed}.csv"
        record.to_csv(run_path)
        limit_path = spec.outdir / f"limit_{seed}.csv"
        limit.to_csv(limit_path)
        tau_sgd = record.times * cfg.epsilon * cfg.h
        svg_path = spec.outdir / f"loss_curves_{seed}.svg"
        svgplot.emit_svg(
            [
                ("sgd (slow time)", tau_sgd[1:], record.losses[1:]),
                ("reduced limit", limit.times[1:], limit.losses[1:] + 1e-16),
            ],
            dict(kind="line", title="SGD vs two-timescale limit", x_label="slow time",
                 y_label="loss", logy=True),
            svg_path,
        )
        rows.append(_summary_rows(seed, record))
        out += [run_path, limit_path, svg_path]
    summary = spec.outdir / "summary.csv"
    _write_summary(summary, _align_header(len(rows[0]) - 3), rows)
    return out + [summary]


def _run_fig3(spec: ExperimentSpec) -> list:
    """Function snapshots of the reference SGD run: initialization, the end
    of the weight-fitting phase, and the end of training."""
    target = demo_target()
    act = smooth_sigmoid(DEMO_ETA)
    cfg0 = _sgd_demo_config(spec)
    out = []
    rows = []
    for seed in spec.seeds:
        rng = np.random.default_rng(seed)
        a0, u0 = sample_certified_init(DEMO_M, target, rng)
        cfg = replace(cfg0, seed=seed, eval_every=max(cfg0.steps // 100, 1))
        record = train(NetworkState(a0, u0), target, act, cfg)
        marks = [0, int(0.03 * (len(record) - 1)), len(record) - 1]
        names = ["init", "weights-fitted", "final"]
        for mark, name in zip(marks, names):
            state = NetworkState(record.weights[mark], record.positions[mark])
            svg_path = spec.outdir / f"network_{name}_{seed}.svg"
            Path(svg_path).write_text(
                svgplot.function_overlay(
                    target,
                    [(f"network (step {int(record.times[mark])})", lambda x, s=state: forward(s, act, x))],
                    positions=record.positions[mark],
                    title=f"two-timescale SGD, {name}",
                )
            )
            out.append(svg_path)
        run_path = spec.outdir / f"run_{seed}.csv"
        record.to_csv(run_path)
        rows.append(_summary_rows(seed, record))
        out.append(run_path)
    summary = spec.outdir / "summary.csv"
    _write_summary(summary, _align_header(len(rows[0]) - 3), rows)
    return out + [summary]


def _run_fig4(spec: ExperimentSpec) -> list:
    """Single-timescale failure: same demo, ratio 1, faithful budget."""
    target = demo_target()
    act = smooth_sigmoid(DEMO_ETA)
    cfg0 = SgdConfig(h=1e-5, epsilon=1.0, steps=1_000_000, noise="uniform", eval_every=10_000)
    cfg0 = _apply_overrides(cfg0, spec.overrides, {"h", "epsilon", "steps", "noise", "eval_every"})
    out = []
    rows = []
    for seed in spec.seeds:
        rng = np.random.default_rng(seed)
        a0, u0 = sample_init(DEMO_M, rng)
        cfg = replace(cfg0, seed=seed)
        record = train(NetworkState(a0, u0), target, act, cfg)
        state = NetworkState(record.final_weights, record.final_positions)
        svg_path = spec.outdir / f"network_final_{seed}.svg"
        Path(svg_path).write_text(
            svgplot.function_overlay(
                target,
                [("network (final)", lambda x, s=state: forward(s, act, x))],
                positions=record.final_positions,
                title="single-timescale SGD, final",
            )
        )
        run_path = spec.outdir / f"run_{seed}.csv"
        record.to_csv(run_path)
        rows.append(_summary_rows(seed, record))
        out += [svg_path, run_path]
    summary = spec.outdir / "summary.csv"
    _write_summary(summary, _align_header(len(rows[0]) - 3), rows)
    return out + [summary]


def _run_fig5(spec: ExperimentSpec) -> list:
    """Final distance to the target across the timescale-ratio grid."""
    target = demo_target()
    act = smooth_sigmoid(DEMO_ETA)
    grid = spec.overrides.get("eps_grid", EPS_GRID)
    unknown = set(spec.overrides) - {"eps_grid"}
    if unknown:
        raise ConfigError(f"invalid overrides: {sorted(unknown)}")
    rows = []
    means, sds = [], []
    for eps in grid:
        h, steps = sweep_schedule(eps)
        l2s = []
        for seed in spec.seeds:
            rng = np.random.default_rng(seed)
            a0, u0 = sample_certified_init(DEMO_M, target, rng)
            cfg = SgdConfig(h=h, epsilon=eps, steps=steps, noise="uniform",
                            seed=1000 + seed, eval_every=steps)
            record = train(NetworkState(a0, u0), target, act, cfg)
            l2 = math.sqrt(2.0 * record.final_loss)
            l2s.append(l2)
            rows.append([f"{eps:.17g}", seed, record.final_loss, 2.0 * record.final_loss,
                         *map(float, record.final_alignment)])
        means.append(float(np.mean(l2s)))
        sds.append(float(np.std(l2s)))
    summary = spec.outdir / "summary.csv"
    _write_summary(summary, ["eps", *_align_header(len(rows[0]) - 4)], rows)
    svg_path = spec.outdir / "l2_vs_eps.svg"
    svgplot.emit_svg(
        np.array(means),
        dict(kind="bar", labels=[f"{e:g}" for e in grid], errors=np.array(sds),
             title="distance to target vs timescale ratio", x_label="timescale ratio",
             y_label="final L2 distance"),
        svg_path,
    )
    return [summary, svg_path]


_MULTI_ETA = 1e-2
_MULTI_M = 10
# Budgets scaled from the reference protocol (stepsize 1.0) to stepsizes at
# which averaged-batch descent actually contracts for the feature count at
# hand, preserving the total stepped time eps*h*steps of the slow layer.
# Ten axes also need a smaller stepsize so the large initial residual cannot
# scatter the positions out of the domain before the weights settle.
_MULTI_PROTOCOLS = {
    2: dict(
        h=0.3, batch=1000,
        tt=dict(epsilon=1e-2, steps=17_000), std=dict(epsilon=1.0, steps=1_000),
    ),
    10: dict(
        h=0.05, batch=2000,
        tt=dict(epsilon=1e-2, steps=50_000), std=dict(epsilon=1.0, steps=6_000),
    ),
}


def _multi_init(rng: np.random.Generator, m: int, dim: int) -> AdditiveNetworkState:
    return AdditiveNetworkState(0.0, rng.uniform(0.0, 3.0, (m, dim)), rng.random((m, dim)))


def _run_multidim(spec: ExperimentSpec, dim: int) -> list:
    axis = demo_axis_target()
    target = AdditiveTarget(tuple([axis] * dim))
    act = smooth_sigmoid(_MULTI_ETA)
    protocol = _MULTI_PROTOCOLS[dim]
    out = []
    rows = []
    for seed in spec.seeds:
        for regime, params in (("two-timescale", protocol["tt"]), ("standard", protocol["std"])):
            cfg = SgdConfig(h=protocol["h"], batch_size=protocol["batch"], noise="none",
                            seed=seed, eval_every=params["steps"], **params)
            cfg = _apply_overrides(cfg, spec.overrides, {"h", "steps", "batch_size", "eval_every", "epsilon"})
            if "steps" in spec.overrides:
                cfg = replace(cfg, eval_every=cfg.steps)
            rng = np.random.default_rng(seed)
            state0 = _multi_init(rng, _MULTI_M, dim)
            record = train(state0, target, act, cfg)
            run_path = spec.outdir / f"run_{regime}_{seed}.csv"
            record.to_csv(run_path)
            rows.append([regime, seed, record.final_loss, 2.0 * record.final_loss,
                         *map(float, record.final_alignment)])
            out.append(run_path)
            if dim == 2:
                svg_path = spec.outdir / f"positions_{regime}_{seed}.svg"
                Path(svg_path).write_text(_positions_2d_svg(
                    axis, record.final_positions.reshape(_MULTI_M, dim),
                    title=f"{regime} regime, final positions"))
                out.append(svg_path)
    summary = spec.outdir / "summary.csv"
    n_align = len(rows[0]) - 4
    _write_summary(summary, ["regime", *_align_header(n_align)], rows)
    return out + [summary]


def _positions_2d_svg(axis_target: PiecewiseConstantTarget, positions: np.ndarray, title="") -> str:
    """Planar target shading with the neuron coordinates drawn as axis lines."""
    size = 480
    pad = 40
    bp = axis_target.breakpoints
    vals = axis_target.values
    vmax = 2.0 * float(np.max(vals)) if np.max(vals) > 0 else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 2 * pad}" height="{size + 2 * pad}" '
        f'viewBox="0 0 {size + 2 * pad} {size + 2 * pad}" font-family="Helvetica,Arial,sans-serif">',
        f'<rect width="{size + 2 * pad}" height="{size + 2 * pad}" fill="#ffffff"/>',
        f'<text x="{pad + size / 2}" y="24" text-anchor="middle" font-size="15">{title}</text>',
    ]
    def px(v):
        return pad + v * size
    def py(v):
        return pad + (1.0 - v) * size
    for i in range(vals.size):
        for j in range(vals.size):
            shade = (vals[i] + vals[j]) / vmax
            blue = int(255 - 150 * shade)
            parts.append(
                f'<rect x="{px(bp[i]):.1f}" y="{py(bp[j + 1]):.1f}" '
                f'width="{(bp[i + 1] - bp[i]) * size:.1f}" height="{(bp[j + 1] - bp[j]) * size:.1f}" '
                f'fill="rgb({blue},{blue},255)"/>'
            )
    for u in positions[:, 0]:
        x = px(min(max(u, 0.0), 1.0))
        parts.append(f'<line x1="{x:.1f}" y1="{py(1):.1f}" x2="{x:.1f}" y2="{py(0):.1f}" '
                     'stroke="#ff7f0e" stroke-width="1.5"/>')
    for u in positions[:, 1]:
        y = py(min(max(u, 0.0), 1.0))
        parts.append(f'<line x1="{px(0):.1f}" y1="{y:.1f}" x2="{px(1):.1f}" y2="{y:.1f}" '
                     'stroke="#ff7f0e" stroke-width="1.5"/>')
    parts.append(f'<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="#000"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _run_relu(spec: ExperimentSpec) -> list:
    """Piecewise-affine recovery with ReLU activations, both regimes."""
    target = demo_relu_target()
    act = relu()
    protocol = _MULTI_PROTOCOLS[2]
    out = []
    rows = []
    for seed in spec.seeds:
        for regime, params in (("two-timescale", protocol["tt"]), ("standard", protocol["std"])):
            cfg = SgdConfig(h=protocol["h"], batch_size=protocol["batch"], noise="none",
                            seed=seed, eval_every=params["steps"], **params)
            cfg = _apply_overrides(cfg, spec.overrides, {"h", "steps", "batch_size", "eval_every", "epsilon"})
            if "steps" in spec.overrides:
                cfg = replace(cfg, eval_every=cfg.steps)
            rng = np.random.default_rng(seed)
            state0 = NetworkState(
                np.concatenate(([0.0], rng.uniform(0.0, 3.0, _MULTI_M))), rng.random(_MULTI_M)
            )
            record = train(state0, target, act, cfg)
            run_path = spec.outdir / f"run_{regime}_{seed}.csv"
            record.to_csv(run_path)
            state = NetworkState(record.final_weights, record.final_positions)
            svg_path = spec.outdir / f"network_{regime}_{seed}.svg"
            Path(svg_path).write_text(
                svgplot.function_overlay(
                    target,
                    [("network (final)", lambda x, s=state: forward(s, act, x))],
                    positions=record.final_positions,
                    title=f"ReLU variant, {regime} regime",
                )
            )
            rows.append([regime, seed, record.final_loss, 2.0 * record.final_loss,
                         *map(float, record.final_alignment)])
            out += [run_path, svg_path]
    summary = spec.outdir / "summary.csv"
    _write_summary(summary, ["regime", *_align_header(len(rows[0]) - 4)], rows)
    return out + [summary]


def _run_counterexample(spec: ExperimentSpec) -> list:
    """All neurons start in the zero piece: the best response vanishes, the
    velocity field is zero, and the loss stays flat above the optimum."""
    target = counterexample_target()
    eta = 1e-3
    act = smooth_sigmoid(eta)
    m = 8
    u0 = np.linspace(0.70, 0.98, m)
    from .network import population_gradient

    a_star = quadratic.best_fit(u0, act, target)
    _, grad_u = population_gradient(NetworkState(a_star, u0), act, target)
    cfg = FlowConfig(dt=1e-3, t_end=6.0, eta=eta, record_every=500)
    cfg = _apply_overrides(cfg, spec.overrides, {"dt", "t_end", "record_every"})
    record = integrate_limit_smooth(u0, target, act, cfg)
    run_path = spec.outdir / "run_limit.csv"
    record.to_csv(run_path)
    svg_path = spec.outdir / "loss_flat.svg"
    svgplot.emit_svg(
        [("limit loss", record.times, record.losses)],
        dict(kind="line", title="trapped initialization: flat loss",
             x_label="slow time", y_label="loss"),
        svg_path,
    )
    rows = [[0, record.final_loss, 2.0 * record.final_loss, *map(float, record.final_alignment)]]
    summary = spec.outdir / "summary.csv"
    _write_summary(summary, _align_header(len(rows[0]) - 3), rows)
    report = spec.outdir / "velocity_norm.csv"
    report.write_text(
        "initial_velocity_norm,final_loss,loss_spread\n"
        f"{float(np.linalg.norm(grad_u)):.17g},{record.final_loss:.17g},"
        f"{float(np.max(record.losses) - np.min(record.losses)):.17g}\n"
    )
    return [run_path, svg_path, summary, report]


def _run_lemmas(spec: ExperimentSpec) -> list:
    trials = int(spec.overrides.get("trials", 1000))
    unknown = set(spec.overrides) - {"trials", "seed"}
    if unknown:
        raise ConfigError(f"invalid overrides: {sorted(unknown)}")
    rng = np.random.default_rng(int(spec.overrides.get("seed", 0)))
    reports = oracles.lemma_suite(rng, trials=trials)
    table = oracles.format_report_table(reports)
    print(table)
    csv_path = spec.outdir / "oracle_report.csv"
    oracles.reports_to_csv(reports, csv_path)
    (spec.outdir / "oracle_report.txt").write_text(table + "\n")
    if not all(r.passed for r in reports):
        raise ExperimentError("at least one certified inequality failed")
    return [csv_path, spec.outdir / "oracle_report.txt"]


EXPERIMENT_IDS = (
    "fig2",
    "fig3",
    "fig4",
    "fig5-barplot",
    "fig6-2d",
    "fig8-10d",
    "fig9-relu",
    "counterexample",
    "lemmas",
    "custom",
)


def run_experiment(spec: ExperimentSpec) -> list:
    """Run one experiment; returns the list of files written."""
    spec.outdir.mkdir(parents=True, exist_ok=True)
    if spec.experiment_id == "fig2":
        return _run_fig2(spec)
    if spec.experiment_id == "fig3":
        return _run_fig3(spec)
    if spec.experiment_id == "fig4":
        return _run_fig4(spec)
    if spec.experiment_id == "fig5-barplot":
        return _run_fig5(spec)
    if spec.experiment_id == "fig6-2d":
        return _run_multidim(spec, dim=2)
    if spec.experiment_id == "fig8-10d":
        return _run_multidim(spec, dim=10)
    if spec.experiment_id == "fig9-relu":
        return _run_relu(spec)
    if spec.experiment_id == "counterexample":
        return _run_counterexample(spec)
    if spec.experiment_id == "lemmas":
        return _run_lemmas(spec)
    if spec.experiment_id == "custom":
        return _run_custom(spec)
    raise ConfigError(f"unknown experiment {spec.experiment_id!r}")


# ---------------------------------------------------------------------------
# Custom runs from a TOML config


def _load_toml(text: str) -> dict:
    try:
        import tomllib as toml
    except ImportError:
        import tomli as toml
    try:
        return toml.loads(text)
    except toml.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc


def _target_from_config(section: dict):
    if "breakpoints" in section:
        try:
            return PiecewiseConstantTarget(
                np.asarray(section["breakpoints"], float), np.asarray(section["values"], float)
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad target: {exc}") from exc
    if "params" in section:
        p = section["params"]
        try:
            params = ClassParams(
                n=int(p["n"]),
                min_piece=float(p["min_piece"]),
                min_jump=float(p["min_jump"]),
                sup_bound=float(p["sup_bound"]),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad target params: {exc}") from exc
        return params
    raise ConfigError("target section needs breakpoints/values or params")


def _activation_from_config(section: dict) -> Activation:
    kind = section.get("kind", "smooth-sigmoid")
    try:
        if kind == "smooth-sigmoid":
            return smooth_sigmoid(float(section.get("eta", DEMO_ETA)))
        if kind == "heaviside":
            return heaviside()
        if kind == "relu":
            return relu()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown activation kind {kind!r}")


def _dataclass_from_config(cls, section: dict, defaults: dict):
    merged = {**defaults, **section}
    try:
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {cls.__name__} section: {exc}") from exc


def _run_custom(spec: ExperimentSpec) -> list:
    text = spec.overrides.get("config_text")
    if text is None:
        path = spec.overrides.get("config_path")
        if path is None:
            raise ConfigError("custom experiment needs a config file")
        text = Path(path).read_text()
    data = _load_toml(text)
    exp = data.get("experiment", {})
    kind = exp.get("kind")
    if kind not in ("sgd", "flow-full", "flow-smooth", "flow-reduced"):
        raise ConfigError("experiment.kind must be sgd, flow-full, flow-smooth or flow-reduced")
    name = exp.get("name", kind)
    seeds = spec.seeds if "seeds" not in exp else tuple(int(s) for s in exp["seeds"])

    target_spec = _target_from_config(data.get("target", {}))
    act = _activation_from_config(data.get("activation", {}))
    init = data.get("init", {})
    m = int(init.get("m", DEMO_M))
    init_kind = init.get("kind", "uniform")
    if init_kind not in ("uniform", "certified"):
        raise ConfigError("init.kind must be uniform or certified")

    out = []
    rows = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        target = target_spec if isinstance(target_spec, PiecewiseConstantTarget) else None
        if target is None:
            from .targets import sample_target

            target = sample_target(target_spec, rng)
        if init_kind == "certified":
            a0, u0 = sample_certified_init(m, target, rng)
        else:
            a0, u0 = sample_init(m, rng)

        if kind == "sgd":
            cfg = _dataclass_from_config(SgdConfig, data.get("sgd", {}), dict(h=1e-3, epsilon=2e-5, steps=10_000))
            cfg = replace(cfg, seed=seed)
            record = train(NetworkState(a0, u0), target, act, cfg)
        else:
            cfg = _dataclass_from_config(
                FlowConfig, data.get("flow", {}), dict(dt=1e-3, t_end=1.0, eta=act.eta)
            )
            try:
                if kind == "flow-reduced":
                    record = integrate_limit_reduced(u0, target, cfg)
                elif kind == "flow-smooth":
                    record = integrate_limit_smooth(u0, target, act, cfg)
                else:
                    record = integrate_full_flow(a0, u0, target, act, cfg)
            except (ValueError, RuntimeError) as exc:
                raise ExperimentError(f"flow run failed: {exc}") from exc
        run_path = spec.outdir / f"run_{name}_{seed}.csv"
        record.to_csv(run_path)
        out.append(run_path)
        rows.append(_summary_rows(seed, record))
        svg_path = spec.outdir / f"loss_{name}_{seed}.svg"
        svgplot.emit_svg(
            [("loss", record.times, record.losses)],
            dict(kind="line", title=name, x_label="time", y_label="loss"),
            svg_path,
        )
        out.append(svg_path)
    summary = spec.outdir / "summary.csv"
    _write_summary(summary, _align_header(len(rows[0]) - 3), rows)
    return out + [summary]
