"""Counter-based random streams.

Every variate is a pure function of (seed, stream, path id, draw index) via
Philox4x32-10, so path blocks can be produced in any order, on any number of
workers, in chunks of any size, with identical results.

Stream ids keep the model's independence requirements structural:

* DIFFUSION for the Brownian increments of the normalized spot
* SPIKE for jump counts / times / amplitudes (independent of diffusion)

Path-id domains separate the LSMC phases: regression-phase paths live at
offset 0, repricing-phase paths at ``PRICING_PATH_BASE``, PPO training
episodes at ``TRAIN_PATH_BASE``. Callers never pick raw offsets themselves.
"""

from __future__ import annotations

import numpy as np

from . import kernels

STREAM_DIFFUSION = 0x1D1FF
STREAM_SPIKE = 0x5135
PRICING_PATH_BASE = 1 << 40
TRAIN_PATH_BASE = 1 << 41


def _split_seed(seed: int):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF


def normals(seed: int, stream: int, path0: int, n_paths: int, n_draws: int) -> np.ndarray:
    """(n_paths, n_draws) standard normals for absolute paths path0..path0+n."""
    lo, hi = _split_seed(seed)
    return kernels.philox_normals(lo, hi, stream, path0, n_paths, n_draws)


def uniform_pairs(seed: int, stream: int, path0: int, n_paths: int, n_draws: int) -> np.ndarray:
    """(n_paths, n_draws, 2) open-interval uniforms."""
    lo, hi = _split_seed(seed)
    return kernels.philox_uniforms(lo, hi, stream, path0, n_paths, n_draws)
