"""Toy-scale supervised training: AdamW, cosine decay, and ablation sweeps.

Runs are deterministic functions of (config, task, seed): parameter init,
batch order, and the optimizer trajectory are all driven by seeded
generators, so repeating a run reproduces the loss history bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ContractError, NumericError
from .model import ArchConfig, ModelParams, build, count_flops, count_params, forward, iter_params
from .patm import PhaseMode
from .synth import SynthTask, make_dataset
from .tensor import Tape, Tensor, softmax_cross_entropy

__all__ = [
    "TrainConfig",
    "History",
    "AblationRow",
    "AblationTable",
    "adamw_init",
    "adamw_step",
    "cosine_lr",
    "accuracy",
    "train",
    "ablate",
    "ABLATION_AXES",
]

_DTYPES = {"f32": np.float32, "f64": np.float64}


@dataclass
class TrainConfig:
    epochs: int = 250
    batch_size: int = 64
    lr: float = 3e-3
    weight_decay: float = 0.05
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    schedule: str = "cosine"
    seed: int = 0
    precision: str = "f64"

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        # lr == 0 is allowed: it is the standard no-op training diagnostic.
        if self.lr < 0:
            raise ConfigurationError("lr must be >= 0")
        if self.weight_decay < 0:
            raise ConfigurationError("weight_decay must be >= 0")
        if self.schedule != "cosine":
            raise ConfigurationError(f"unknown schedule {self.schedule!r}")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.precision not in _DTYPES:
            raise ConfigurationError(f"precision must be one of {sorted(_DTYPES)}")


def cosine_lr(t: int, total: int, lr0: float) -> float:
    """lr0 * (1 + cos(pi * t / total)) / 2; lr0 at t=0, 0 at t=total."""
    if total <= 0:
        raise ConfigurationError("cosine_lr: total steps must be positive")
    if not 0 <= t <= total:
        raise ContractError(f"cosine_lr: t={t} outside [0, {total}]")
    return lr0 * (1.0 + math.cos(math.pi * t / total)) / 2.0


@dataclass
class AdamWState:
    m: list[np.ndarray]
    v: list[np.ndarray]


def adamw_init(params: list[np.ndarray]) -> AdamWState:
    return AdamWState([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adamw_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamWState,
    t: int,
    cfg: TrainConfig,
    lr: float | None = None,
) -> None:
    """One decoupled-weight-decay Adam update, in place.

    Decay multiplies each parameter by (1 - lr*wd) before the bias-corrected
    Adam step, so zero gradients still shrink weights when wd > 0.
    """
    if t < 1:
        raise ContractError("adamw_step: t counts from 1")
    if len(params) != len(grads):
        raise ContractError("params and grads differ in length")
    lr = cfg.lr if lr is None else lr
    b1, b2 = cfg.betas
    decay = 1.0 - lr * cfg.weight_decay
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for i, (p, g) in enumerate(zip(params, grads)):
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient in parameter {i} at step {t}")
        m, v = state.m[i], state.v[i]
        p *= decay
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)


@dataclass
class History:
    """Per-step losses and learning rates, per-epoch accuracies."""

    loss: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)

    def save(self, out_dir: str) -> tuple[str, str]:
        """Write losses.csv (per step) and accuracy.csv (per epoch)."""
        os.makedirs(out_dir, exist_ok=True)
        losses = os.path.join(out_dir, "losses.csv")
        with open(losses, "w") as fh:
            fh.write("step,loss,lr\n")
            for i, (ls, lr) in enumerate(zip(self.loss, self.lr)):
                fh.write(f"{i},{ls!r},{lr!r}\n")
        accs = os.path.join(out_dir, "accuracy.csv")
        with open(accs, "w") as fh:
            fh.write("epoch,train_acc,val_acc\n")
            for i, (ta, va) in enumerate(zip(self.train_acc, self.val_acc)):
                fh.write(f"{i},{ta!r},{va!r}\n")
        return losses, accs


def accuracy(m: ModelParams, x: np.ndarray, y: np.ndarray, batch: int = 256) -> float:
    """Top-1 accuracy, evaluated without a tape."""
    hits = 0
    for lo in range(0, len(x), batch):
        logits = forward(m, x[lo : lo + batch])
        hits += int((logits.data.argmax(axis=1) == y[lo : lo + batch]).sum())
    return hits / len(x)


def train(
    arch: ArchConfig, task: SynthTask, tc: TrainConfig
) -> tuple[ModelParams, History]:
    """Cross-entropy training of ``arch`` on a synthetic task.

    Loss is recorded per step, accuracy per epoch. Aborts with NumericError
    (naming the step) if the loss leaves the finite range.
    """
    dtype = _DTYPES[tc.precision]
    x_train, y_train, x_val, y_val = make_dataset(task)
    x_train = x_train.astype(dtype)
    x_val = x_val.astype(dtype)

    model = build(arch, seed=tc.seed, dtype=dtype)
    params = [t for _, t in iter_params(model)]
    raw = [t.data for t in params]
    state = adamw_init(raw)
    batch_rng = np.random.default_rng(tc.seed)
    dropout_rng = np.random.default_rng(tc.seed + 1) if arch.dropout > 0 else None

    steps_per_epoch = math.ceil(len(x_train) / tc.batch_size)
    total_steps = tc.epochs * steps_per_epoch
    history = History()
    step = 0
    for _epoch in range(tc.epochs):
        order = batch_rng.permutation(len(x_train))
        for lo in range(0, len(x_train), tc.batch_size):
            idx = order[lo : lo + tc.batch_size]
            xb = Tensor(x_train[idx])
            lr_t = cosine_lr(step, total_steps, tc.lr)
            with Tape() as tape:
                logits = forward(model, xb, rng=dropout_rng)
                loss = softmax_cross_entropy(logits, y_train[idx])
            loss_val = float(loss.data)
            if not math.isfinite(loss_val):
                raise NumericError(f"training diverged: non-finite loss at step {step}")
            tape.backward(loss)
            adamw_step(raw, [t.grad for t in params], state, step + 1, tc, lr=lr_t)
            history.loss.append(loss_val)
            history.lr.append(lr_t)
            step += 1
        history.train_acc.append(accuracy(model, x_train, y_train))
        history.val_acc.append(accuracy(model, x_val, y_val))
    return model, history


# ---------------------------------------------------------------------------
# ablations

ABLATION_AXES: dict[str, list[tuple[str, object]]] = {
    "phase_mode": [
        ("None", PhaseMode.NONE),
        ("Static", PhaseMode.STATIC),
        ("ChannelFC", PhaseMode.CHANNEL_FC),
    ],
    "estimator": [
        ("Identity", PhaseMode.IDENTITY),
        ("DepthWise", PhaseMode.DEPTHWISE),
        ("ChannelFC", PhaseMode.CHANNEL_FC),
    ],
    "window": [("3", 3), ("5", 5), ("7", 7), ("All", "all")],
}


@dataclass
class AblationRow:
    setting: str
    params: int
    flops: int
    val_accs: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.val_accs))

    @property
    def sd(self) -> float:
        return float(np.std(self.val_accs, ddof=1)) if len(self.val_accs) > 1 else 0.0


@dataclass
class AblationTable:
    axis: str
    rows: list[AblationRow]

    def csv_text(self) -> str:
        lines = ["setting,params,flops,mean_val_acc,sd_val_acc,per_seed_val_acc"]
        for r in self.rows:
            per_seed = ";".join(repr(a) for a in r.val_accs)
            lines.append(f"{r.setting},{r.params},{r.flops},{r.mean!r},{r.sd!r},{per_seed}")
        return "\n".join(lines) + "\n"

    def save(self, out_dir: str) -> str:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"ablation_{self.axis}.csv")
        with open(path, "w") as fh:
            fh.write(self.csv_text())
        return path


def _cell_config(base: ArchConfig, axis: str, value) -> ArchConfig:
    if axis in ("phase_mode", "estimator"):
        return replace(base, phase_mode=value)
    return replace(base, window=value)


def _run_cell(args) -> tuple[str, int, float]:
    setting, seed, cfg, task, tc = args
    _model, history = train(cfg, task, replace(tc, seed=seed))
    return setting, seed, history.val_acc[-1]


def ablate(
    axis: str,
    task: SynthTask,
    tc: TrainConfig,
    base: ArchConfig | None = None,
    seeds: tuple[int, ...] = (0, 1, 2),
) -> AblationTable:
    """Train one model per setting of one axis, over a shared seed set.

    Rows mirror the three ablation axes: phase modes (None / Static /
    ChannelFC), estimator forms (Identity / DepthWise / ChannelFC), and
    window sizes (3 / 5 / 7 / All). Values are recorded for inspection, not
    asserted against anything. Cells run in parallel processes when the
    WAVEMLP_THREADS environment variable is set above 1.
    """
    if axis not in ABLATION_AXES:
        raise ConfigurationError(f"unknown ablation axis {axis!r}; choose from {sorted(ABLATION_AXES)}")
    if len(seeds) < 3:
        raise ConfigurationError("ablations use at least 3 seeds")
    if base is None:
        from .model import preset

        base = preset("tiny", num_classes=task.num_classes, input_size=task.grid[:2])
    jobs = []
    for setting, value in ABLATION_AXES[axis]:
        cfg = _cell_config(base, axis, value)
        for seed in seeds:
            jobs.append((setting, seed, cfg, task, tc))
    workers = int(os.environ.get("WAVEMLP_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]
    by_setting: dict[str, dict[int, float]] = {}
    for setting, seed, acc in results:
        by_setting.setdefault(setting, {})[seed] = acc
    rows = []
    for setting, value in ABLATION_AXES[axis]:
        cfg = _cell_config(base, axis, value)
        model = build(cfg, seed=seeds[0])
        accs = tuple(by_setting[setting][s] for s in seeds)
        rows.append(
            AblationRow(setting, count_params(model), count_flops(model, *task.grid[:2]), accs)
        )
    return AblationTable(axis, rows)
