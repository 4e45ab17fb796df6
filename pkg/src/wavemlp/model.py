"""Hierarchical 4-stage networks built from declarative stage configs.

Resolution drops by the stage patch sizes (4, 2, 2, 2 by default) while the
channel count grows. ``count_params`` counts scalar learnables exactly;
``count_flops`` counts multiply-accumulates (1 MAC = 1 FLOP) over matmuls,
windowed token mixing, and stems -- elementwise work (norms, activations,
cos/sin modulation, residuals, pooling) is excluded by convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .blocks import (
    BlockParams,
    NormParams,
    StemParams,
    block_forward,
    init_block,
    init_stem,
    normalize,
    patch_embed,
)
from .errors import ConfigurationError, DimensionError, NumericError
from .patm import DEPTHWISE_KERNEL, PhaseMode
from .tensor import Tensor, add, matmul, reduce_mean, transpose

__all__ = [
    "StageSpec",
    "ArchConfig",
    "ModelParams",
    "PRESETS",
    "REFERENCE_BUDGETS",
    "preset",
    "load_arch_config",
    "arch_config_to_dict",
    "build",
    "iter_params",
    "forward",
    "count_params",
    "count_flops",
    "stage_resolutions",
]


@dataclass
class StageSpec:
    dim: int
    depth: int
    expansion: int


@dataclass
class ArchConfig:
    """Declarative description of one network.

    ``window`` is an odd int shared by all stages, or the string "all" to
    span every token along each axis (window 2*extent-1 per stage; requires
    ``input_size`` and ties the parameter shapes to it). ``input_size`` is
    also required for the STATIC phase mode, whose per-position phase grids
    must match the stage resolutions.
    """

    stages: list[StageSpec]
    window: int | str = 7
    phase_mode: PhaseMode = PhaseMode.CHANNEL_FC
    patch_sizes: tuple[int, int, int, int] = (4, 2, 2, 2)
    num_classes: int = 1000
    input_channels: int = 3
    input_size: tuple[int, int] | None = None
    dropout: float = 0.0

    def __post_init__(self):
        self.phase_mode = PhaseMode(self.phase_mode)
        self.stages = [s if isinstance(s, StageSpec) else StageSpec(**s) for s in self.stages]
        if len(self.stages) != 4:
            raise ConfigurationError(f"expected 4 stages, got {len(self.stages)}")
        dims = [s.dim for s in self.stages]
        if any(d2 <= d1 for d1, d2 in zip(dims, dims[1:])):
            raise ConfigurationError(f"stage dims must strictly increase, got {dims}")
        if any(s.depth < 1 for s in self.stages):
            raise ConfigurationError("stage depths must be >= 1")
        if any(s.expansion < 1 for s in self.stages):
            raise ConfigurationError("stage expansions must be >= 1")
        if len(self.patch_sizes) != 4 or any(p < 1 for p in self.patch_sizes):
            raise ConfigurationError(f"bad patch sizes {self.patch_sizes}")
        if isinstance(self.window, str):
            if self.window != "all":
                raise ConfigurationError(f"window must be an odd int or 'all', got {self.window!r}")
        elif self.window < 1 or self.window % 2 == 0:
            raise ConfigurationError(f"window must be odd and positive, got {self.window}")
        if self.num_classes < 2:
            raise ConfigurationError("need at least 2 classes")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must be in [0, 1), got {self.dropout}")
        needs_size = self.window == "all" or self.phase_mode is PhaseMode.STATIC
        if needs_size and self.input_size is None:
            raise ConfigurationError(
                "window='all' and static phase require input_size to fix parameter shapes"
            )


def _stages(dims, depths, expansions):
    return [StageSpec(d, n, e) for d, n, e in zip(dims, depths, expansions)]


PRESETS: dict[str, dict] = {
    "T*": dict(
        stages=_stages((64, 128, 320, 512), (2, 2, 4, 2), (4, 4, 4, 4)),
        phase_mode=PhaseMode.DEPTHWISE,
    ),
    "T": dict(
        stages=_stages((64, 128, 320, 512), (2, 2, 4, 2), (4, 4, 4, 4)),
        phase_mode=PhaseMode.CHANNEL_FC,
    ),
    "S": dict(
        stages=_stages((64, 128, 320, 512), (2, 3, 10, 3), (4, 4, 4, 4)),
        phase_mode=PhaseMode.CHANNEL_FC,
    ),
    "M": dict(
        stages=_stages((64, 128, 320, 512), (3, 4, 18, 3), (8, 8, 4, 4)),
        phase_mode=PhaseMode.CHANNEL_FC,
    ),
    "B": dict(
        stages=_stages((96, 192, 384, 768), (2, 2, 18, 2), (4, 4, 4, 4)),
        phase_mode=PhaseMode.CHANNEL_FC,
    ),
    "tiny": dict(
        stages=_stages((8, 16, 24, 32), (1, 1, 1, 1), (2, 2, 2, 2)),
        phase_mode=PhaseMode.CHANNEL_FC,
        num_classes=4,
    ),
}

# Reference budgets each preset is sized against, at 224x224:
# (parameter count, MACs). Matching is checked at +/-10%.
REFERENCE_BUDGETS: dict[str, tuple[float, float]] = {
    "T*": (15e6, 2.1e9),
    "T": (17e6, 2.4e9),
    "S": (30e6, 4.5e9),
    "M": (44e6, 7.9e9),
    "B": (63e6, 10.2e9),
}


def preset(name: str, **overrides) -> ArchConfig:
    """A fresh ArchConfig for one of the named presets."""
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    spec = dict(PRESETS[name])
    spec["stages"] = [replace(s) for s in spec["stages"]]
    spec.update(overrides)
    return ArchConfig(**spec)


_JSON_KEYS = {
    "stages",
    "window",
    "phase_mode",
    "patch_sizes",
    "num_classes",
    "input_channels",
    "input_size",
    "dropout",
}


def load_arch_config(source) -> ArchConfig:
    """Build an ArchConfig from a JSON file path, JSON text, or a dict.

    Schema: {"stages": [{"dim": int, "depth": int, "expansion": int} x4],
    "window": int | "all", "phase_mode": "none" | "static" | "channel_fc" |
    "depthwise" | "identity", "patch_sizes": [int x4], "num_classes": int,
    optional "input_channels", "input_size": [h, w], "dropout"}.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(text) as fh:
                doc = json.load(fh)
    unknown = set(doc) - _JSON_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(doc)
    if "patch_sizes" in kwargs:
        kwargs["patch_sizes"] = tuple(kwargs["patch_sizes"])
    if kwargs.get("input_size") is not None:
        kwargs["input_size"] = tuple(kwargs["input_size"])
    return ArchConfig(**kwargs)


def arch_config_to_dict(cfg: ArchConfig) -> dict:
    return {
        "stages": [dict(dim=s.dim, depth=s.depth, expansion=s.expansion) for s in cfg.stages],
        "window": cfg.window,
        "phase_mode": cfg.phase_mode.value,
        "patch_sizes": list(cfg.patch_sizes),
        "num_classes": cfg.num_classes,
        "input_channels": cfg.input_channels,
        "input_size": list(cfg.input_size) if cfg.input_size else None,
        "dropout": cfg.dropout,
    }


def stage_resolutions(cfg: ArchConfig, h: int, w: int) -> list[tuple[int, int]]:
    """Token-grid size per stage for an h x w input (ceil division)."""
    out = []
    for p in cfg.patch_sizes:
        h, w = math.ceil(h / p), math.ceil(w / p)
        out.append((h, w))
    return out


def _stage_windows(cfg: ArchConfig) -> list[int]:
    if cfg.window != "all":
        return [int(cfg.window)] * 4
    res = stage_resolutions(cfg, *cfg.input_size)
    return [2 * max(hh, ww) - 1 for hh, ww in res]


@dataclass
class ModelParams:
    """All learnables of one network, in build order."""

    config: ArchConfig
    windows: list[int]
    stems: list[StemParams]
    stages: list[list[BlockParams]] = field(repr=False)
    final_norm: NormParams = field(repr=False)
    head: Tensor = field(repr=False)  # [num_classes, d4]
    head_bias: Tensor = field(repr=False)  # [num_classes]


def build(cfg: ArchConfig, seed: int = 0, dtype=np.float64) -> ModelParams:
    """Deterministic initialization: one seed, one fixed draw order."""
    rng = np.random.default_rng(seed)
    windows = _stage_windows(cfg)
    static_res = (
        stage_resolutions(cfg, *cfg.input_size)
        if cfg.phase_mode is PhaseMode.STATIC
        else [None] * 4
    )
    stems: list[StemParams] = []
    stages: list[list[BlockParams]] = []
    c_in = cfg.input_channels
    for i, spec in enumerate(cfg.stages):
        stems.append(init_stem(cfg.patch_sizes[i], c_in, spec.dim, rng, dtype))
        blocks = [
            init_block(spec.dim, spec.expansion, windows[i], cfg.phase_mode, rng, static_res[i], dtype)
            for _ in range(spec.depth)
        ]
        stages.append(blocks)
        c_in = spec.dim
    d4 = cfg.stages[-1].dim
    final_norm = NormParams(
        Tensor(np.ones(d4, dtype=dtype), requires_grad=True),
        Tensor(np.zeros(d4, dtype=dtype), requires_grad=True),
    )
    bound = 1.0 / math.sqrt(d4)
    head = Tensor(
        rng.uniform(-bound, bound, size=(cfg.num_classes, d4)).astype(dtype), requires_grad=True
    )
    head_bias = Tensor(np.zeros(cfg.num_classes, dtype=dtype), requires_grad=True)
    return ModelParams(cfg, windows, stems, stages, final_norm, head, head_bias)


def _patm_named(prefix: str, p) -> list[tuple[str, Tensor]]:
    out = [(f"{prefix}.wc", p.wc)]
    if p.wtheta is not None:
        out.append((f"{prefix}.wtheta", p.wtheta))
    out += [(f"{prefix}.wt", p.wt), (f"{prefix}.wi", p.wi), (f"{prefix}.wout", p.wout)]
    return out


def iter_params(m: ModelParams) -> list[tuple[str, Tensor]]:
    """(name, tensor) pairs in a fixed order; the optimizer relies on it."""
    out: list[tuple[str, Tensor]] = []
    for i, (stem, blocks) in enumerate(zip(m.stems, m.stages)):
        out.append((f"stem{i}.weight", stem.weight))
        for j, b in enumerate(blocks):
            pre = f"stage{i}.block{j}"
            out += [(f"{pre}.norm1.scale", b.norm1.scale), (f"{pre}.norm1.shift", b.norm1.shift)]
            out += _patm_named(f"{pre}.patm_h", b.patm_h)
            out += _patm_named(f"{pre}.patm_w", b.patm_w)
            out.append((f"{pre}.branch_fc", b.branch_fc))
            out += [(f"{pre}.norm2.scale", b.norm2.scale), (f"{pre}.norm2.shift", b.norm2.shift)]
            out += [(f"{pre}.mlp_fc1", b.mlp_fc1), (f"{pre}.mlp_fc2", b.mlp_fc2)]
    out += [("final_norm.scale", m.final_norm.scale), ("final_norm.shift", m.final_norm.shift)]
    out += [("head.weight", m.head), ("head.bias", m.head_bias)]
    return out


def _check_finite(x: Tensor, layer: str) -> None:
    if not np.isfinite(x.data).all():
        raise NumericError(f"non-finite values after {layer}")


def forward(m: ModelParams, images, rng: np.random.Generator | None = None) -> Tensor:
    """Images [B, H, W, C] -> logits [B, num_classes].

    ``rng`` enables dropout (training only); omit it for deterministic
    evaluation. Raises NumericError naming the first layer that produced a
    non-finite value.
    """
    dtype = m.head.dtype
    x = images if isinstance(images, Tensor) else Tensor(np.asarray(images, dtype=dtype))
    if x.ndim != 4:
        raise DimensionError(f"expected [B, H, W, C] images, got {tuple(x.shape)}")
    if x.shape[1] < 4 or x.shape[2] < 4:
        raise DimensionError(f"input spatial size must be >= 4, got {tuple(x.shape[1:3])}")
    if x.shape[3] != m.config.input_channels:
        raise DimensionError(
            f"expected {m.config.input_channels} channels, got {x.shape[3]}"
        )
    drop = m.config.dropout if rng is not None else 0.0
    for i, (stem, blocks) in enumerate(zip(m.stems, m.stages)):
        x = patch_embed(x, stem)
        _check_finite(x, f"stem{i}")
        for j, b in enumerate(blocks):
            x = block_forward(x, b, drop, rng)
            _check_finite(x, f"stage{i}.block{j}")
    x = normalize(x, m.final_norm.scale, m.final_norm.shift)
    pooled = reduce_mean(x, axis=(1, 2))
    logits = add(matmul(pooled, transpose(m.head)), m.head_bias)
    _check_finite(logits, "head")
    return logits


def count_params(m: ModelParams) -> int:
    """Exact number of scalar learnables."""
    return sum(t.size for _, t in iter_params(m))


def count_flops(m: ModelParams, h: int, w: int) -> int:
    """Multiply-accumulate count for one image at h x w (1 MAC = 1 FLOP).

    Counts matmuls (channel-FCs, the head), windowed token mixing
    (2*window MACs per token element, boundary zeros included), the
    depthwise phase convolution, and stem projections. Elementwise work is
    excluded.
    """
    cfg = m.config
    total = 0
    c_in = cfg.input_channels
    for i, spec in enumerate(cfg.stages):
        p = cfg.patch_sizes[i]
        h, w = math.ceil(h / p), math.ceil(w / p)
        n = h * w
        d = spec.dim
        total += n * (p * p * c_in) * d  # stem projection
        per_patm = 2 * n * d * d + 2 * m.windows[i] * n * d  # wc, wout, mixing
        if cfg.phase_mode is PhaseMode.CHANNEL_FC:
            per_patm += n * d * d
        elif cfg.phase_mode is PhaseMode.DEPTHWISE:
            per_patm += DEPTHWISE_KERNEL * n * d
        per_block = 2 * per_patm + n * d * d  # both axes + direct branch
        per_block += 2 * n * d * (spec.expansion * d)  # channel MLP
        total += spec.depth * per_block
        c_in = d
    total += cfg.stages[-1].dim * cfg.num_classes  # head
    return total
