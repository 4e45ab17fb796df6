"""Phase-aware token mixing over [batch, height, width, channels] grids.

The module turns tokens into waves (amplitude from a channel-FC, phase from
an estimator), unfolds them into real/imaginary parts, and mixes neighbouring
tokens along one spatial axis inside an odd-length window with learnable
per-offset, per-channel weights for each part, followed by an output
channel-FC.

Window weights are indexed by relative offset and shared across positions
(depthwise-convolution style), so one parameter set serves any input size;
positions past the boundary contribute exact zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DimensionError
from .tensor import (
    Tensor,
    add,
    cos,
    matmul,
    mul,
    pad_zeros,
    reshape,
    sin,
    slice_window,
    transpose,
)

__all__ = [
    "PhaseMode",
    "PatmParams",
    "AXIS_INDEX",
    "channel_fc",
    "compute_amplitude",
    "estimate_phase",
    "aggregate_tokens",
    "patm_forward",
    "init_patm",
    "patm_param_count",
    "DEPTHWISE_KERNEL",
]

AXIS_INDEX = {"height": 1, "width": 2}

# Phase-estimator depthwise kernel length: minimal non-trivial window.
DEPTHWISE_KERNEL = 3


class PhaseMode(str, Enum):
    """How token phases are produced.

    NONE       all-zero phases (mixing degenerates to a plain token-FC).
    STATIC     a learned per-position grid, independent of the input.
    CHANNEL_FC phases from a channel-FC of the input (dynamic).
    DEPTHWISE  phases from a per-channel length-3 convolution (dynamic).
    IDENTITY   phases are the input features themselves (dynamic,
               parameter-free; the estimator-ablation baseline).
    """

    NONE = "none"
    STATIC = "static"
    CHANNEL_FC = "channel_fc"
    DEPTHWISE = "depthwise"
    IDENTITY = "identity"

    @property
    def dynamic(self) -> bool:
        return self in (PhaseMode.CHANNEL_FC, PhaseMode.DEPTHWISE, PhaseMode.IDENTITY)


@dataclass
class PatmParams:
    """Weights of one phase-aware token-mixing instance.

    wc     [d, d]        amplitude channel-FC
    wtheta               phase estimator; shape depends on phase_mode:
                         [d, d] for CHANNEL_FC, [3, d] for DEPTHWISE,
                         [H, W, d] for STATIC, None for NONE/IDENTITY
    wt     [window, d]   real-part mixing weights, indexed by relative offset
    wi     [window, d]   imaginary-part mixing weights, same shape as wt
    wout   [d, d]        output channel-FC
    axis                 "height" or "width"
    window               odd positive mixing span
    """

    wc: Tensor
    wtheta: Tensor | None
    wt: Tensor
    wi: Tensor
    wout: Tensor
    axis: str
    window: int
    phase_mode: PhaseMode

    def __post_init__(self):
        if self.axis not in AXIS_INDEX:
            raise ConfigurationError(f"axis must be height or width, got {self.axis!r}")
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigurationError(f"window must be odd and positive, got {self.window}")
        if tuple(self.wt.shape) != tuple(self.wi.shape):
            raise ConfigurationError(
                f"wt shape {tuple(self.wt.shape)} != wi shape {tuple(self.wi.shape)}"
            )


def channel_fc(x: Tensor, w: Tensor) -> Tensor:
    """Apply y_j = W @ x_j to every token; x is [..., c_in], W is [c_out, c_in]."""
    if w.ndim != 2:
        raise DimensionError(f"channel_fc weight must be 2-D, got {tuple(w.shape)}")
    c_in = x.shape[-1]
    if w.shape[1] != c_in:
        raise DimensionError(
            f"channel_fc: weight expects {w.shape[1]} channels, input has {c_in}"
        )
    lead = tuple(x.shape[:-1])
    n = int(np.prod(lead)) if lead else 1
    flat = reshape(x, (n, c_in))
    out = matmul(flat, transpose(w))
    return reshape(out, lead + (w.shape[0],))


def compute_amplitude(x: Tensor, wc: Tensor) -> Tensor:
    """Token amplitudes via a plain channel-FC; no absolute value is taken.

    Negative entries are fine: a sign flip is the same wave with the phase
    shifted by pi, which the cos/sin mixing handles implicitly.
    """
    return channel_fc(x, wc)


def _window_weighted_sum(x: Tensor, weights: Tensor, axis_idx: int, window: int) -> Tensor:
    """sum_r weights[r] * x[j + r - window//2] with zero padding, per channel."""
    half = window // 2
    extent = x.shape[axis_idx]
    padded = pad_zeros(x, axis_idx, half, half) if half else x
    acc = None
    for r in range(window):
        shifted = slice_window(padded, axis_idx, r, extent) if half else padded
        row = slice_window(weights, 0, r, 1)  # [1, d] broadcasts over positions
        term = mul(shifted, row)
        acc = term if acc is None else add(acc, term)
    return acc


def estimate_phase(x: Tensor, mode: PhaseMode, wtheta: Tensor | None, axis: str) -> Tensor:
    """Produce a phase grid (radians) for every token element."""
    mode = PhaseMode(mode)
    if mode is PhaseMode.NONE:
        return Tensor(np.zeros_like(x.data))
    if mode is PhaseMode.IDENTITY:
        return x
    if wtheta is None:
        raise ConfigurationError(f"phase mode {mode.value} needs estimator weights")
    if mode is PhaseMode.STATIC:
        if tuple(x.shape[1:3]) != tuple(wtheta.shape[:2]):
            raise ConfigurationError(
                f"static phase grid is {tuple(wtheta.shape[:2])} but input is "
                f"{tuple(x.shape[1:3])}"
            )
        zeros = Tensor(np.zeros(x.shape, dtype=x.dtype))
        return add(zeros, wtheta)  # broadcast over batch
    if mode is PhaseMode.CHANNEL_FC:
        return channel_fc(x, wtheta)
    # DEPTHWISE: per-channel 1-D convolution along this instance's axis
    return _window_weighted_sum(x, wtheta, AXIS_INDEX[axis], DEPTHWISE_KERNEL)


def aggregate_tokens(
    amp: Tensor, theta: Tensor, wt: Tensor, wi: Tensor, axis: str, window: int
) -> Tensor:
    """Windowed phase-modulated mixing along one spatial axis.

    out[j] = sum_r wt[r] * (amp*cos(theta))[j+r] + wi[r] * (amp*sin(theta))[j+r]

    with r over the centered window and zero padding outside the grid. The
    weights are per relative offset and per channel; the orthogonal spatial
    axis and the batch are untouched. Output shape equals input shape.
    """
    if window < 1 or window % 2 == 0:
        raise ConfigurationError(f"window must be odd and positive, got {window}")
    if tuple(amp.shape) != tuple(theta.shape):
        raise DimensionError(
            f"amplitude shape {tuple(amp.shape)} != phase shape {tuple(theta.shape)}"
        )
    d = amp.shape[-1]
    for name, w in (("wt", wt), ("wi", wi)):
        if tuple(w.shape) != (window, d):
            raise DimensionError(
                f"{name} must be [{window}, {d}], got {tuple(w.shape)}"
            )
    axis_idx = AXIS_INDEX[axis]
    real = mul(amp, cos(theta))
    imag = mul(amp, sin(theta))
    return add(
        _window_weighted_sum(real, wt, axis_idx, window),
        _window_weighted_sum(imag, wi, axis_idx, window),
    )


def patm_forward(x: Tensor, p: PatmParams) -> Tensor:
    """Full module: amplitude, phase, windowed mixing, output channel-FC."""
    amp = compute_amplitude(x, p.wc)
    theta = estimate_phase(x, p.phase_mode, p.wtheta, p.axis)
    mixed = aggregate_tokens(amp, theta, p.wt, p.wi, p.axis, p.window)
    return channel_fc(mixed, p.wout)


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


def init_patm(
    d: int,
    window: int,
    axis: str,
    phase_mode: PhaseMode,
    rng: np.random.Generator,
    static_size: tuple[int, int] | None = None,
    dtype=np.float64,
) -> PatmParams:
    """Draw fresh parameters; draw order is fixed so seeds are reproducible."""
    phase_mode = PhaseMode(phase_mode)
    wc = _uniform(rng, (d, d), d, dtype)
    if phase_mode is PhaseMode.CHANNEL_FC:
        wtheta = _uniform(rng, (d, d), d, dtype)
    elif phase_mode is PhaseMode.DEPTHWISE:
        wtheta = _uniform(rng, (DEPTHWISE_KERNEL, d), DEPTHWISE_KERNEL, dtype)
    elif phase_mode is PhaseMode.STATIC:
        if static_size is None:
            raise ConfigurationError("static phase mode needs the stage grid size")
        h, w = static_size
        wtheta = Tensor(
            rng.uniform(-math.pi, math.pi, size=(h, w, d)).astype(dtype),
            requires_grad=True,
        )
    else:
        wtheta = None
    wt = _uniform(rng, (window, d), window, dtype)
    wi = _uniform(rng, (window, d), window, dtype)
    wout = _uniform(rng, (d, d), d, dtype)
    return PatmParams(wc, wtheta, wt, wi, wout, axis, window, phase_mode)


def patm_param_count(p: PatmParams) -> int:
    """Number of scalar learnables; independent of the input's spatial size."""
    total = p.wc.size + p.wt.size + p.wi.size + p.wout.size
    if p.wtheta is not None:
        total += p.wtheta.size
    return total
