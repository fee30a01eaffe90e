"""The (alpha, tau) weight-variation model used to generate update snapshots."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .graph import DynamicGraph, GraphError, UpdateBatch, WeightUpdate

GRID = 1000  # weights are kept on a 1/GRID fixed-point grid
FLOOR = Fraction(1, GRID)


@dataclass
class WeightVariationModel:
    """Each snapshot re-draws the weights of a fraction ``alpha`` of the edges.

    A changed edge gets a weight in ``[w0 * (1 - tau), w0 * (1 + tau)]``
    where ``w0`` is its initial weight, rounded inward onto the grid and
    clamped to ``1/GRID``.  With ``trend`` set, one direction is drawn per
    snapshot and shared by all changed edges; otherwise each edge draws its own.
    """

    alpha: float = 0.35
    tau: float = 0.30
    seed: int = 0
    trend: bool = False
    clamped: int = field(default=0, init=False)

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise GraphError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.tau < 0:
            raise GraphError(f"tau must be >= 0, got {self.tau}")
        self.rng = random.Random(self.seed)
        self._tau = Fraction(str(self.tau))

    def metadata(self) -> dict:
        return {"alpha": self.alpha, "tau": self.tau, "seed": self.seed, "trend": self.trend}

    def _draw(self, w0: int, sign: int) -> Fraction:
        r = Fraction(self.rng.randint(0, math.floor(self._tau * GRID)), GRID)
        raw = w0 * (1 + sign * r)
        scaled = raw * GRID
        w = Fraction(math.floor(scaled) if sign > 0 else math.ceil(scaled), GRID)
        if w < FLOOR:
            self.clamped += 1
            w = FLOOR
        return w

    def next_batch(self, graph: DynamicGraph, timestamp: int) -> UpdateBatch:
        edges = graph.edges
        count = round(self.alpha * len(edges))
        chosen = sorted(self.rng.sample(edges, count))
        trend_sign = self.rng.choice((-1, 1))
        updates = []
        for e in chosen:
            sign = trend_sign if self.trend else self.rng.choice((-1, 1))
            w = self._draw(graph.initial_weights[e], sign)
            updates.append(WeightUpdate(e, w.numerator if w.denominator == 1 else w, timestamp))
        return UpdateBatch(timestamp, updates)

    def batches(self, graph: DynamicGraph, snapshots: int, start: int = 1, apply: bool = False) -> list[UpdateBatch]:
        """Draw ``snapshots`` batches; with ``apply`` each one is applied before the next is drawn."""
        out = []
        for i in range(snapshots):
            b = self.next_batch(graph, start + i)
            if apply:
                graph.apply_snapshot(b.updates, b.timestamp)
            out.append(b)
        return out
