"""Experiment orchestration: configs, multi-seed runs, metrics files, curves.

Every run is a pure function of (config, seed): one master seed derives
independent named RNG streams (env init, action sampling, option selection,
parameter init, buffer sampling), so toggling one consumer never shifts the
others and paired-seed comparisons across variants stay paired.

Artifacts per experiment, under <out_dir>/<run_name>/:
    manifest.json        fully resolved config (every default materialized)
    seed_<k>/metrics.csv per-step metrics stream
    seed_<k>/final.npz   network checkpoint (learning variants)
    aggregate.csv        step,mean,sd of the trailing-window smoothed return

CSV floats are written with repr (shortest round-trip), so identical runs
produce byte-identical files.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__, agent, envs, trainer
from .backend import BACKEND
from .trainer import StepMetrics, TrainConfig

STREAM_NAMES = ("env", "action", "option", "init", "buffer")

VARIANT_CHOICES = tuple(agent.VARIANTS) + ("random",)


def rng_streams(master_seed: int, names: Sequence[str] = STREAM_NAMES):
    root = np.random.SeedSequence(master_seed)
    return {n: np.random.default_rng(c) for n, c in zip(names, root.spawn(len(names)))}


@dataclass
class RunConfig:
    env: str
    variant: str
    n_options: int = 2
    fe_width: int = 8
    depth_delta: int = 0
    scaling: bool = True
    entangling: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    out_dir: Path | None = None
    smooth_window: int = 2000
    smooth_stride: int = 100
    checkpoint_every: int | None = None

    def __post_init__(self):
        if self.env not in envs.ENV_NAMES:
            raise ValueError(f"unknown env {self.env!r}")
        if self.variant not in VARIANT_CHOICES:
            raise ValueError(f"unknown variant {self.variant!r}")
        self.train.n_options = self.n_options

    def run_name(self) -> str:
        parts = [self.env, self.variant, f"o{self.n_options}"]
        if self.fe_width != 8:
            parts.append(f"w{self.fe_width}")
        if self.depth_delta:
            parts.append(f"d{self.depth_delta:+d}")
        if not self.scaling:
            parts.append("noscale")
        if not self.entangling:
            parts.append("noent")
        return "_".join(parts)

    def resolved(self) -> dict:
        d = asdict(self)
        d["out_dir"] = str(self.out_dir) if self.out_dir else None
        d["seeds"] = list(self.seeds)
        d["train"]["eps_decay_rate"] = self.train.resolved_eps_decay()
        d["run_name"] = self.run_name()
        d["package_version"] = __version__
        d["kernel_backend"] = BACKEND
        return d


@dataclass
class SeedResult:
    seed: int
    metrics: list[StepMetrics]

    @property
    def episodes(self) -> list[tuple[int, float]]:
        return [
            (m.step, m.episode_return)
            for m in self.metrics
            if m.episode_return is not None
        ]


@dataclass
class AggregateCurve:
    steps: np.ndarray
    mean: np.ndarray
    sd: np.ndarray


@dataclass
class ExperimentResult:
    config: RunConfig
    directory: Path | None
    seed_results: list[SeedResult]
    curve: AggregateCurve

    def end_values(self) -> list[float]:
        """Per-seed trailing-window smoothed return at the final step."""
        total = self.config.train.total_steps
        out = []
        for sr in self.seed_results:
            pts = smooth_trailing(sr.episodes, self.config.smooth_window, [total])
            out.append(pts[0][1] if pts else float("nan"))
        return out


# --- smoothing / aggregation --------------------------------------------


def smooth_trailing(
    events: Sequence[tuple[int, float]],
    window: int = 2000,
    eval_steps: Iterable[int] | None = None,
) -> list[tuple[int, float]]:
    """Trailing-window mean of episode returns.

    events are (end_step, return) pairs in step order. The value at step t
    averages the episodes ending in (t - window, t]; steps whose window holds
    no completed episode yield no point. By default the curve is evaluated
    at the episode-end steps themselves.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    events = list(events)
    if eval_steps is None:
        eval_steps = [s for s, _ in events]
    out = []
    lo = 0
    hi = 0
    acc = 0.0
    for t in eval_steps:
        while hi < len(events) and events[hi][0] <= t:
            acc += events[hi][1]
            hi += 1
        while lo < hi and events[lo][0] <= t - window:
            acc -= events[lo][1]
            lo += 1
        if hi > lo:
            out.append((t, acc / (hi - lo)))
    return out


def _grid(total_steps: int, stride: int) -> list[int]:
    steps = list(range(stride, total_steps + 1, stride))
    if not steps or steps[-1] != total_steps:
        steps.append(total_steps)
    return steps


def aggregate(
    seed_episodes: Sequence[Sequence[tuple[int, float]]],
    window: int,
    total_steps: int,
    stride: int,
) -> AggregateCurve:
    """Across-seed mean and population SD of the smoothed return on a fixed
    step grid. Where a seed's window is empty the last defined value carries
    forward; leading grid points with any still-undefined seed are dropped.
    """
    grid = _grid(total_steps, stride)
    series = []
    for events in seed_episodes:
        pts = dict(smooth_trailing(events, window, grid))
        vals = []
        last = math.nan
        for t in grid:
            if t in pts:
                last = pts[t]
            vals.append(last)
        series.append(vals)
    arr = np.array(series)  # (n_seeds, n_grid)
    defined = ~np.isnan(arr).any(axis=0)
    steps = np.array(grid)[defined]
    data = arr[:, defined]
    return AggregateCurve(steps, data.mean(axis=0), data.std(axis=0))


def standard_suites(
    env: str,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    total_steps: int = 60_000,
    out_dir: Path | None = None,
) -> dict[str, list[RunConfig]]:
    """The built-in experiment matrices, one config list per study.

    variants: the eight hybrid substitutions plus the classical and random
    baselines; fe_widths: classical extractor scaled to 16/24/32 hidden
    units; option_counts: 3 and 4 options for the classical agent and the
    quantum-policy variant; extractor_ablations: the quantum-extractor
    agent with depth +-2, scalings fixed at 1, and entanglement removed.
    """
    def cfg(variant, **kw):
        return RunConfig(
            env=env, variant=variant, train=TrainConfig(total_steps=total_steps),
            seeds=tuple(seeds), out_dir=out_dir, **kw,
        )

    return {
        "variants": [cfg(v) for v in VARIANT_CHOICES],
        "fe_widths": [cfg("classical", fe_width=w) for w in (16, 24, 32)],
        "option_counts": [
            cfg(v, n_options=k) for v in ("classical", "hybrid_p") for k in (3, 4)
        ],
        "extractor_ablations": [
            cfg("hybrid_f", depth_delta=+2),
            cfg("hybrid_f", depth_delta=-2),
            cfg("hybrid_f", scaling=False),
            cfg("hybrid_f", entangling=False),
        ],
    }


# --- single-seed execution ----------------------------------------------


def _run_seed(config: RunConfig, seed: int, run_dir: Path | None) -> SeedResult:
    streams = rng_streams(seed)
    env = envs.make_env(config.env)
    if config.variant == "random":
        metrics = _run_random(env, config.train, streams)
        return SeedResult(seed, metrics)
    net = agent.build(
        config.env,
        config.variant,
        config.n_options,
        streams["init"],
        fe_width=config.fe_width,
        depth_delta=config.depth_delta,
        scaling=config.scaling,
        entangling=config.entangling,
    )
    target = agent.make_target(net)
    cb = None
    if run_dir is not None:
        seed_dir = run_dir / f"seed_{seed:03d}"
        seed_dir.mkdir(parents=True, exist_ok=True)

        def cb(t, n, _dir=seed_dir):
            agent.save_checkpoint(n, _dir / ("final.npz" if t == config.train.total_steps else f"step_{t:08d}.npz"))

    metrics = trainer.run_training(
        env, net, target, config.train, streams,
        checkpoint_cb=cb, checkpoint_every=config.checkpoint_every,
    )
    return SeedResult(seed, metrics)


def _run_random(env, train_cfg: TrainConfig, streams) -> list[StepMetrics]:
    """Uniform-action agent pushed through the same episode loop so its
    metrics are directly comparable with the learners'."""
    rng = streams["action"]
    env.reset(seed=int(streams["env"].integers(2**32)))
    ln_a = math.log(env.n_actions)
    metrics = []
    ep_return = 0.0
    for t in range(1, train_cfg.total_steps + 1):
        step = env.step(int(rng.integers(env.n_actions)))
        ep_return += step.reward
        ep = None
        if step.terminated or step.truncated:
            ep = ep_return
            ep_return = 0.0
            env.reset()
        metrics.append(StepMetrics(t, ep, ln_a, math.nan, None, math.nan, None))
    return metrics


def _seed_worker(args):
    config, seed, run_dir = args
    return _run_seed(config, seed, run_dir)


def run_experiment(config: RunConfig) -> ExperimentResult:
    """Train every seed (deterministically), write artifacts, aggregate."""
    run_dir = None
    if config.out_dir is not None:
        run_dir = Path(config.out_dir) / config.run_name()
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "manifest.json").write_text(
            json.dumps(config.resolved(), indent=2, sort_keys=True) + "\n"
        )
    workers = int(os.environ.get("QOC_WORKERS", "1"))
    jobs = [(config, seed, run_dir) for seed in config.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            seed_results = list(pool.map(_seed_worker, jobs))
    else:
        seed_results = [_run_seed(*job) for job in jobs]
    curve = aggregate(
        [sr.episodes for sr in seed_results],
        config.smooth_window,
        config.train.total_steps,
        config.smooth_stride,
    )
    if run_dir is not None:
        for sr in seed_results:
            seed_dir = run_dir / f"seed_{sr.seed:03d}"
            seed_dir.mkdir(parents=True, exist_ok=True)
            write_metrics_csv(seed_dir / "metrics.csv", sr.metrics)
        write_curve_csv(run_dir / "aggregate.csv", curve)
    return ExperimentResult(config, run_dir, seed_results, curve)


# --- file formats --------------------------------------------------------

METRICS_HEADER = "step,episode_return,entropy,actor_loss,critic_loss,epsilon,option"


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def write_metrics_csv(path: Path, metrics: Sequence[StepMetrics]) -> None:
    rows = [METRICS_HEADER]
    for m in metrics:
        rows.append(
            f"{m.step},{_fmt(m.episode_return)},{_fmt(m.entropy)},"
            f"{_fmt(m.actor_loss)},{_fmt(m.critic_loss)},{_fmt(m.epsilon)},"
            f"{'' if m.option is None else m.option}"
        )
    Path(path).write_text("\n".join(rows) + "\n")


def read_metrics_csv(path: Path) -> list[StepMetrics]:
    lines = Path(path).read_text().splitlines()
    if lines[0] != METRICS_HEADER:
        raise ValueError(f"unexpected metrics header in {path}")
    out = []
    for line in lines[1:]:
        step, ep, ent, al, cl, eps, opt = line.split(",")
        out.append(
            StepMetrics(
                int(step),
                float(ep) if ep else None,
                float(ent) if ent else math.nan,
                float(al) if al else math.nan,
                float(cl) if cl else None,
                float(eps) if eps else math.nan,
                int(opt) if opt else None,
            )
        )
    return out


CURVE_HEADER = "step,mean,sd"


def write_curve_csv(path: Path, curve: AggregateCurve) -> None:
    rows = [CURVE_HEADER]
    for s, m, d in zip(curve.steps, curve.mean, curve.sd):
        rows.append(f"{int(s)},{_fmt(m)},{_fmt(d)}")
    Path(path).write_text("\n".join(rows) + "\n")


def read_curve_csv(path: Path) -> AggregateCurve:
    lines = Path(path).read_text().splitlines()
    if lines[0] != CURVE_HEADER:
        raise ValueError(f"unexpected curve header in {path}")
    rows = [line.split(",") for line in lines[1:]]
    return AggregateCurve(
        np.array([int(r[0]) for r in rows]),
        np.array([float(r[1]) for r in rows]),
        np.array([float(r[2]) for r in rows]),
    )


# --- summaries ------------------------------------------------------------


@dataclass
class SummaryRow:
    label: str
    env: str
    mean: float
    sd: float
    relative: float


def _pooled_returns(run_dir: Path) -> np.ndarray:
    returns = []
    for seed_dir in sorted(Path(run_dir).glob("seed_*")):
        for m in read_metrics_csv(seed_dir / "metrics.csv"):
            if m.episode_return is not None:
                returns.append(m.episode_return)
    return np.array(returns)


def summarize(in_dir: Path) -> list[SummaryRow]:
    """Mean/SD of episode returns pooled over seeds and steps, with the
    ratio to the classical baseline of the same environment (which must be
    present). For the penalty environment the ratio reads as relative
    penalty: lower is better.
    """
    in_dir = Path(in_dir)
    runs = []
    for run_dir in sorted(in_dir.iterdir()):
        manifest = run_dir / "manifest.json"
        if not manifest.is_file():
            continue
        cfg = json.loads(manifest.read_text())
        returns = _pooled_returns(run_dir)
        runs.append((cfg, returns))
    if not runs:
        raise ValueError(f"no runs found under {in_dir}")
    baselines: dict[str, float] = {}
    for cfg, returns in runs:
        if cfg["variant"] == "classical" and cfg["n_options"] == 2 and cfg["fe_width"] == 8:
            baselines[cfg["env"]] = float(returns.mean())
    rows = []
    for cfg, returns in runs:
        env = cfg["env"]
        if env not in baselines:
            raise ValueError(f"no classical baseline run found for {env}")
        mean = float(returns.mean())
        rows.append(
            SummaryRow(
                label=cfg["run_name"],
                env=env,
                mean=mean,
                sd=float(returns.std()),
                relative=mean / baselines[env],
            )
        )
    return rows


# --- plotting -------------------------------------------------------------

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
)


def render_svg(
    curves: Sequence[tuple[str, AggregateCurve]],
    path: Path,
    title: str = "",
    width: int = 720,
    height: int = 440,
) -> None:
    """Self-contained SVG: one mean polyline and one +-SD band per curve.

    Purely textual output with fixed-precision coordinates, so identical
    curves render to identical bytes.
    """
    if not curves:
        raise ValueError("no curves to render")
    ml, mr, mt, mb = 62, 16, 34, 42
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([c.steps for _, c in curves])
    los = np.concatenate([c.mean - c.sd for _, c in curves])
    his = np.concatenate([c.mean + c.sd for _, c in curves])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(los.min()), float(his.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.04 * (y1 - y0)
    y0 -= pad
    y1 += pad

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + (y1 - y) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" font-family="sans-serif" font-size="14" '
        f'text-anchor="middle">{title}</text>' if title else "",
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        parts.append(
            f'<line x1="{px(xv):.2f}" y1="{mt + ph}" x2="{px(xv):.2f}" y2="{mt + ph + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(xv):.2f}" y="{mt + ph + 16}" font-family="sans-serif" '
            f'font-size="10" text-anchor="middle">{xv:g}</text>'
        )
        parts.append(
            f'<line x1="{ml - 4}" y1="{py(yv):.2f}" x2="{ml}" y2="{py(yv):.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{ml - 6}" y="{py(yv) + 3:.2f}" font-family="sans-serif" '
            f'font-size="10" text-anchor="end">{yv:.4g}</text>'
        )
    parts.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for i, (label, c) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        band = [f"{px(s):.2f},{py(m + d):.2f}" for s, m, d in zip(c.steps, c.mean, c.sd)]
        band += [
            f"{px(s):.2f},{py(m - d):.2f}"
            for s, m, d in zip(c.steps[::-1], c.mean[::-1], c.sd[::-1])
        ]
        parts.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.18"/>')
        line = " ".join(f"{px(s):.2f},{py(m):.2f}" for s, m in zip(c.steps, c.mean))
        parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = mt + 14 + 14 * i
        parts.append(
            f'<line x1="{ml + 8}" y1="{ly - 4}" x2="{ml + 28}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{ml + 33}" y="{ly}" font-family="sans-serif" font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(p for p in parts if p) + "\n")


# --- gradient check (CLI + acceptance shared) ------------------------------


def gradcheck_report(
    n_circuits: int = 100, n_composed: int = 20, seed: int = 0
) -> tuple[bool, list[str]]:
    """Cross-validate circuit gradients three ways, plus composed-model
    finite differences through a full feature->encode->head->loss chain.

    Relative error uses the gradient's own scale as floor:
    max|a-b| / max(1, max|b|), which keeps near-zero components from
    drowning the check in finite-difference noise.
    """
    from . import diffnet, qsim, vqc

    rng = np.random.default_rng(seed)
    lines = []
    ok = True

    worst_fd = 0.0
    worst_ps = 0.0
    for _ in range(n_circuits):
        n = int(rng.integers(1, 7))
        n_layers = int(rng.integers(1, 6))
        circuit = []
        pid = 0
        for _layer in range(n_layers):
            for q in range(n):
                kind = (qsim.GateKind.RX, qsim.GateKind.RY, qsim.GateKind.RZ)[
                    int(rng.integers(3))
                ]
                circuit.append(
                    qsim.GateOp(kind, q, angle=float(rng.uniform(-np.pi, np.pi)), param_id=pid)
                )
                pid += 1
            if n > 1:
                for q in range(n - 1):
                    circuit.append(qsim.GateOp(qsim.GateKind.CNOT, target=q + 1, control=q))
        observables = [qsim.Observable(q) for q in range(n)]
        adj = qsim.grad_expectations(circuit, observables, n)
        ps = qsim.param_shift_expectations(circuit, observables, n)
        fd = qsim.finite_diff_expectations(circuit, observables, n)
        worst_ps = max(worst_ps, np.abs(adj - ps).max() / max(1.0, np.abs(ps).max()))
        worst_fd = max(worst_fd, np.abs(adj - fd).max() / max(1.0, np.abs(fd).max()))
    ok_ps = worst_ps < 1e-10
    ok_fd = worst_fd < 1e-4
    ok &= ok_ps and ok_fd
    lines.append(
        f"[{'PASS' if ok_fd else 'FAIL'}] adjoint vs finite differences over "
        f"{n_circuits} random circuits: max rel err {worst_fd:.3e} (tol 1e-4)"
    )
    lines.append(
        f"[{'PASS' if ok_ps else 'FAIL'}] adjoint vs parameter shift over "
        f"{n_circuits} random circuits: max rel err {worst_ps:.3e} (tol 1e-10)"
    )

    worst = 0.0
    for _ in range(n_composed):
        d = int(rng.integers(2, 5))
        mlp = diffnet.Mlp(d, int(rng.integers(2, 6)), d, rng)
        head = vqc.VqcModule(vqc.VqcArchitecture(d, 2), rng)
        weights = rng.uniform(-1, 1, d)
        x_in = rng.uniform(-2, 2, d)
        params = mlp.named_parameters("mlp.") + head.named_parameters("head.")

        def loss_tensor():
            out = head(diffnet.arctan_encode(mlp(diffnet.Tensor(x_in))))
            return diffnet.tsum(diffnet.mul(out, weights))

        root = loss_tensor()
        diffnet.backward(root)
        grads = {name: t.grad.copy() for name, t in params}
        h = 1e-6
        for name, t in params:
            fd_grad = np.zeros_like(t.values)
            it = np.nditer(t.values, flags=["multi_index"])
            for _v in it:
                idx = it.multi_index
                orig = t.values[idx]
                t.values[idx] = orig + h
                fp = float(loss_tensor().values)
                t.values[idx] = orig - h
                fm = float(loss_tensor().values)
                t.values[idx] = orig
                fd_grad[idx] = (fp - fm) / (2 * h)
            scale = max(1.0, np.abs(fd_grad).max())
            worst = max(worst, np.abs(grads[name] - fd_grad).max() / scale)
    ok_comp = worst < 1e-4
    ok &= ok_comp
    lines.append(
        f"[{'PASS' if ok_comp else 'FAIL'}] composed model vs finite differences over "
        f"{n_composed} instances: max rel err {worst:.3e} (tol 1e-4)"
    )
    return bool(ok), lines
