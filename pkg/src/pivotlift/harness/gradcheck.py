"""Randomized gradient verification over small networks.

Draws a population of narrow MLPs with random shapes, compares their
backward pass against central finite differences, and reports the worst
relative error seen. Biases are jittered off zero because fresh nets
can park pre-activations exactly on the relu kink, where a finite
difference reads the wrong one-sided slope through no fault of the
analytic gradient.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..nn import Mlp, MlpSpec
from ..nn.gradcheck import check_mlp


@dataclass(frozen=True)
class GradcheckResult:
    checked: int
    failures: int
    max_rel_err: float
    elapsed: float
    cases: tuple

    @property
    def ok(self):
        return self.failures == 0


def run_gradcheck(count=50, seed=0, max_dim=16, rel_tol=1e-5, h=1e-6):
    """Check `count` random MLPs with layer widths up to max_dim."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    cases = []
    failures = 0
    worst = 0.0
    for _ in range(count):
        in_dim = int(rng.integers(1, max_dim + 1))
        depth = int(rng.integers(0, 3))
        hidden = tuple(int(rng.integers(1, max_dim + 1))
                       for _ in range(depth))
        out_dim = int(rng.integers(1, max_dim + 1))
        net = Mlp(MlpSpec(in_dim, hidden, out_dim), rng=rng)
        for b in net.biases:
            b.data = b.data + rng.uniform(-0.3, 0.3, size=b.data.shape)
        x = rng.standard_normal((4, in_dim))
        err, ok = check_mlp(net, x, h=h, rel_tol=rel_tol)
        worst = max(worst, err)
        failures += 0 if ok else 1
        cases.append(((in_dim,) + hidden + (out_dim,), err, ok))
    return GradcheckResult(
        checked=count,
        failures=failures,
        max_rel_err=worst,
        elapsed=time.perf_counter() - t0,
        cases=tuple(cases),
    )
