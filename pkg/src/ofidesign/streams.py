"""Reproducible response streams for simulated experiments.

Draws are keyed by (master seed, replication, support point) through
SeedSequence spawn keys over the counter-based Philox generator, and the
k-th observation at a point always consumes the k-th variate of that
point's stream.  Policies that visit the same point therefore see the
same responses (common random numbers), no matter how allocation orders
differ between methods.
"""

from __future__ import annotations

import numpy as np

from .models import ResponseModel


def point_stream_raw(model: ResponseModel, master_seed: int, replication: int,
                     point_index: int, n_max: int) -> np.ndarray:
    """The fixed block of standardized draws for one (replication, point)."""
    ss = np.random.SeedSequence(master_seed,
                                spawn_key=(replication, point_index))
    gen = np.random.Generator(np.random.Philox(ss))
    return model.standard_draws(gen, n_max)


class ResponseStreams:
    """Pre-drawn responses for one replication over fixed support points."""

    def __init__(self, model: ResponseModel, eta_points: np.ndarray,
                 master_seed: int, n_max: int, replication: int = 0):
        eta_points = np.asarray(eta_points, dtype=float).ravel()
        self.values = []
        for i, eta_i in enumerate(eta_points):
            raw = point_stream_raw(model, master_seed, replication, i, n_max)
            self.values.append(model.response_from_standard(eta_i, raw))
        self.used = np.zeros(eta_points.shape[0], dtype=np.int64)

    def take(self, point_index: int, count: int) -> np.ndarray:
        """Next ``count`` responses at a point, in stream order."""
        start = self.used[point_index]
        stop = start + count
        block = self.values[point_index]
        if stop > block.shape[0]:
            raise ValueError("response stream exhausted; raise n_max")
        self.used[point_index] = stop
        return block[start:stop].copy()
