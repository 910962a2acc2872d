"""Component-sampling plans: alias tables, seeded streams, and the
uniform/importance distributions used by the randomized solver.

Two independent indices are drawn each iteration: the extrapolation index
from p and the table-refresh index from q.  The replay contract pinned here
(and relied on by the dense/lazy equivalence tests) is: one shared stream,
p-draw first, then q-draw, one uniform consumed per draw.
"""

from __future__ import annotations

import numpy as np

from .operators import LipschitzProfile, lpq_bound

# Probabilities below this are rejected rather than clamped: 1/p_j multiplies
# the extrapolation correction, so a denormal probability poisons the run.
MIN_PROB = 1e-15


class AliasTable:
    """Walker/Vose alias table; O(m) build, O(1) sampling from one uniform."""

    __slots__ = ("m", "prob", "alias")

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        m = p.size
        scaled = p * m / p.sum()
        prob = np.ones(m)
        alias = np.arange(m, dtype=np.intp)
        small = [i for i in range(m) if scaled[i] < 1.0]
        large = [i for i in range(m) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding; prob/alias defaults already cover them
        self.m = m
        self.prob = prob
        self.alias = alias

    def sample(self, u):
        """Map one uniform in [0,1) to an index with the table's distribution."""
        scaled = u * self.m
        i = int(scaled)
        if scaled - i < self.prob[i]:
            return i
        return int(self.alias[i])

    def sample_many(self, u):
        """Vectorized ``sample`` over an array of uniforms (same mapping)."""
        scaled = np.asarray(u) * self.m
        i = scaled.astype(np.intp)
        return np.where(scaled - i < self.prob[i], i, self.alias[i])


class RngStream:
    """Counted deterministic uniform stream.

    The generator is pinned to numpy's PCG64; ``Generator.random()`` consumes
    exactly one 64-bit output per double, so the draw at position c is a pure
    function of (seed, stream, c) and ``jump_to`` can replay from any counter.
    """

    __slots__ = ("seed", "stream", "counter", "_gen")

    def __init__(self, seed, stream=0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.counter = 0
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, self.stream))))

    def uniform(self):
        self.counter += 1
        return self._gen.random()

    def uniform_array(self, n):
        self.counter += n
        return self._gen.random(n)

    def jump_to(self, counter):
        bg = np.random.PCG64(np.random.SeedSequence((self.seed, self.stream)))
        if counter:
            bg.advance(counter)
        self._gen = np.random.Generator(bg)
        self.counter = counter

    def numpy_generator(self):
        """Underlying numpy Generator (advances the shared state)."""
        return self._gen


class SamplingPlan:
    """Distributions p (extrapolation index) and q (refresh index), with O(1)
    alias sampling and the step-size constant they induce."""

    def __init__(self, p, q, lpq, mode="custom"):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.shape != q.shape or p.ndim != 1:
            raise ValueError("p and q must be 1-d vectors of equal length")
        for name, v in (("p", p), ("q", q)):
            if np.any(v < MIN_PROB):
                raise ValueError(f"{name} has entries below {MIN_PROB}; rejected")
            if abs(v.sum() - 1.0) > 1e-12:
                raise ValueError(f"{name} must sum to 1 within 1e-12")
        if not np.isfinite(lpq) or lpq <= 0.0:
            raise ValueError("lpq must be positive and finite")
        self.p = p
        self.q = q
        self.m = p.size
        self.lpq = float(lpq)
        self.j_star = int(np.argmin(q))
        self.q_min = float(q[self.j_star])
        self.mode = mode
        self._alias_p = AliasTable(p)
        self._alias_q = AliasTable(q)
        if mode == "importance" and self.q_min < 1.0 / (2.0 * self.m) - 1e-12:
            raise AssertionError("importance plan violated q_min >= 1/(2m)")

    def sample_p(self, rng):
        return self._alias_p.sample(rng.uniform())

    def sample_q(self, rng):
        return self._alias_q.sample(rng.uniform())


def build_plan(mode, profile=None, p=None, q=None, lpq=None):
    """Build a sampling plan.

    mode "uniform": p = q = 1/m.
    mode "importance": p_j proportional to sqrt(L_j) and q_j proportional to
    max(sqrt(L_j), mean of sqrt(L)), which guarantees min_j q_j >= 1/(2m).
    mode "custom": caller-supplied p and q (per-problem exponent plans).

    ``lpq`` defaults to the worst-case bound sqrt(sum L_j^2/(p_j q_j^2)).
    """
    if mode in ("uniform", "importance"):
        if profile is None:
            raise ValueError(f"{mode} plan needs a Lipschitz profile")
        if not isinstance(profile, LipschitzProfile):
            profile = LipschitzProfile(profile)
        m = profile.m
        if mode == "uniform":
            p = np.full(m, 1.0 / m)
            q = p.copy()
        else:
            root = np.sqrt(profile.lam)
            p = root / root.sum()
            clipped = np.maximum(root, root.mean())
            q = clipped / clipped.sum()
    elif mode == "custom":
        if p is None or q is None:
            raise ValueError("custom plan needs explicit p and q")
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
    else:
        raise ValueError(f"unknown plan mode {mode!r}")
    if lpq is None:
        if profile is None:
            raise ValueError("custom plan needs either lpq or a profile")
        lpq = lpq_bound(profile, p, q)
    return SamplingPlan(p, q, lpq, mode=mode)


def problem_plan(instance):
    """The per-family sampling plan: the instance's exponent weights with its
    refined step-size constant, or the generic importance plan when the family
    does not prescribe weights (policy evaluation)."""
    if instance.plan_weights is None:
        return build_plan("importance", profile=instance.profile)
    w = np.asarray(instance.plan_weights, dtype=float)
    if np.any(w <= 0.0):
        bad = int(np.argmin(w))
        raise ValueError(f"zero-weight component {bad} in {instance.family} plan")
    p = w / w.sum()
    return SamplingPlan(p, p.copy(), instance.plan_lpq, mode="problem")
