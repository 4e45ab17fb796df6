"""Composite layers: token-mixing block, channel MLP, normalization, stems.

A block normalizes its input once, feeds that through three parallel
branches (phase-aware mixing along height, along width, and a direct
channel-FC), sums them onto the residual, then applies a pre-norm two-layer
channel MLP with GELU. Stems embed non-overlapping patches with a linear
projection, zero-padding ragged edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError
from .patm import PatmParams, PhaseMode, channel_fc, init_patm, patm_forward
from .tensor import (
    Tensor,
    add,
    div,
    gelu,
    mul,
    pad_zeros,
    reduce_mean,
    reshape,
    sqrt,
    sub,
    transpose,
)

__all__ = [
    "NORM_EPS",
    "NormParams",
    "BlockParams",
    "StemParams",
    "normalize",
    "token_mixing_forward",
    "channel_mlp_forward",
    "block_forward",
    "patch_embed",
    "init_block",
    "init_stem",
]

NORM_EPS = 1e-5


@dataclass
class NormParams:
    scale: Tensor  # [d]
    shift: Tensor  # [d]


@dataclass
class BlockParams:
    """One block: two axis-wise mixing modules, a direct branch, and an MLP."""

    patm_h: PatmParams
    patm_w: PatmParams
    branch_fc: Tensor  # [d, d]
    mlp_fc1: Tensor  # [e*d, d]
    mlp_fc2: Tensor  # [d, e*d]
    norm1: NormParams
    norm2: NormParams

    def __post_init__(self):
        if self.patm_h.axis != "height" or self.patm_w.axis != "width":
            raise ConfigurationError("patm_h must mix height and patm_w width")
        if self.patm_h.window != self.patm_w.window:
            raise ConfigurationError("both mixing modules must share one window")
        if self.patm_h.wc.shape != self.patm_w.wc.shape:
            raise ConfigurationError("both mixing modules must share one channel count")


@dataclass
class StemParams:
    """Patch embedding: flatten patch*patch*c_in pixels, project to c_out."""

    patch: int
    weight: Tensor  # [c_out, patch*patch*c_in]


def normalize(x: Tensor, scale: Tensor, shift: Tensor, eps: float = NORM_EPS) -> Tensor:
    """Standardize each token over its channel axis, then scale and shift."""
    d = x.shape[-1]
    if scale.shape != (d,) or shift.shape != (d,):
        raise DimensionError(f"scale/shift must be [{d}], got {tuple(scale.shape)}")
    mean = reduce_mean(x, axis=-1, keepdims=True)
    centered = sub(x, mean)
    var = reduce_mean(mul(centered, centered), axis=-1, keepdims=True)
    unit = div(centered, sqrt(add(var, eps)))
    return add(mul(unit, scale), shift)


def token_mixing_forward(x: Tensor, b: BlockParams) -> Tensor:
    """Residual sum of the two axis mixers and the direct channel-FC branch."""
    n = normalize(x, b.norm1.scale, b.norm1.shift)
    y = add(
        add(patm_forward(n, b.patm_h), patm_forward(n, b.patm_w)),
        channel_fc(n, b.branch_fc),
    )
    return add(x, y)


def channel_mlp_forward(
    x: Tensor, b: BlockParams, dropout: float = 0.0, rng: np.random.Generator | None = None
) -> Tensor:
    """Residual two-layer per-token MLP with GELU.

    Dropout (inverted, on the hidden activations) is applied only when a
    probability and an rng are both supplied; the correctness path never is.
    """
    n = normalize(x, b.norm2.scale, b.norm2.shift)
    hidden = gelu(channel_fc(n, b.mlp_fc1))
    if dropout > 0.0 and rng is not None:
        keep = (rng.random(hidden.shape) >= dropout).astype(hidden.dtype)
        hidden = mul(hidden, Tensor(keep / (1.0 - dropout)))
    return add(x, channel_fc(hidden, b.mlp_fc2))


def block_forward(
    x: Tensor, b: BlockParams, dropout: float = 0.0, rng: np.random.Generator | None = None
) -> Tensor:
    return channel_mlp_forward(token_mixing_forward(x, b), b, dropout, rng)


def patch_embed(x: Tensor, s: StemParams) -> Tensor:
    """Split [B, H, W, C] into patch*patch tiles and project each to c_out.

    Spatial extents are zero-padded up to the next multiple of the patch
    size, so output extents are ceil(H/p), ceil(W/p).
    """
    if x.ndim != 4:
        raise DimensionError(f"patch_embed expects [B, H, W, C], got {tuple(x.shape)}")
    b, h, w, c = x.shape
    if h == 0 or w == 0 or b == 0 or c == 0:
        raise DimensionError(f"patch_embed: empty input {tuple(x.shape)}")
    p = s.patch
    if s.weight.shape[1] != p * p * c:
        raise DimensionError(
            f"stem expects {s.weight.shape[1] // (p * p)} input channels, got {c}"
        )
    hp, wp = math.ceil(h / p), math.ceil(w / p)
    if hp * p != h:
        x = pad_zeros(x, 1, 0, hp * p - h)
    if wp * p != w:
        x = pad_zeros(x, 2, 0, wp * p - w)
    tiles = reshape(x, (b, hp, p, wp, p, c))
    tiles = transpose(tiles, (0, 1, 3, 2, 4, 5))
    flat = reshape(tiles, (b, hp, wp, p * p * c))
    return channel_fc(flat, s.weight)


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


def _norm_params(d: int, dtype) -> NormParams:
    return NormParams(
        Tensor(np.ones(d, dtype=dtype), requires_grad=True),
        Tensor(np.zeros(d, dtype=dtype), requires_grad=True),
    )


def init_block(
    d: int,
    expansion: int,
    window: int,
    phase_mode: PhaseMode,
    rng: np.random.Generator,
    static_size: tuple[int, int] | None = None,
    dtype=np.float64,
) -> BlockParams:
    """Draw one block's parameters in a fixed order."""
    patm_h = init_patm(d, window, "height", phase_mode, rng, static_size, dtype)
    patm_w = init_patm(d, window, "width", phase_mode, rng, static_size, dtype)
    branch_fc = _uniform(rng, (d, d), d, dtype)
    mlp_fc1 = _uniform(rng, (expansion * d, d), d, dtype)
    mlp_fc2 = _uniform(rng, (d, expansion * d), expansion * d, dtype)
    return BlockParams(
        patm_h, patm_w, branch_fc, mlp_fc1, mlp_fc2, _norm_params(d, dtype), _norm_params(d, dtype)
    )


def init_stem(
    patch: int, c_in: int, c_out: int, rng: np.random.Generator, dtype=np.float64
) -> StemParams:
    fan_in = patch * patch * c_in
    return StemParams(patch, _uniform(rng, (c_out, fan_in), fan_in, dtype))
