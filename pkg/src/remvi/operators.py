"""Finite-sum operator abstraction, component tables, and Lipschitz profiles.

An operator F is given as a sum of m components F_j, each with a declared
sparse output support (the coordinates it can write) and input support (the
coordinates of x it reads).  Component values are exchanged as dense arrays
aligned with the component's fixed output-index array, which keeps per-call
cost proportional to the support size and lets the solver's table keep O(total
support) memory.
"""

from __future__ import annotations

import numpy as np
from scipy.io import mmread

# Aggregate re-summed exactly on this period: incremental updates accumulate
# floating drift over millions of refreshes.
RESUM_PERIOD = 1 << 16


class Component:
    """Base class: a single summand F_j with fixed sparse supports."""

    __slots__ = ("out_idx", "in_idx")

    def __init__(self, out_idx, in_idx):
        self.out_idx = np.asarray(out_idx, dtype=np.intp)
        self.in_idx = np.asarray(in_idx, dtype=np.intp)

    def evaluate(self, x):
        """Return the component value as an array aligned with ``out_idx``."""
        raise NotImplementedError


class CallableComponent(Component):
    """Component wrapping an arbitrary value function (tests, custom ops)."""

    __slots__ = ("fn",)

    def __init__(self, out_idx, in_idx, fn):
        super().__init__(out_idx, in_idx)
        self.fn = fn

    def evaluate(self, x):
        return np.asarray(self.fn(x), dtype=float)


class FiniteSumOperator:
    """F(x) = sum_j F_j(x) over sparse-support components."""

    def __init__(self, components, d):
        if not components:
            raise ValueError("need at least one component")
        self.components = list(components)
        self.m = len(self.components)
        self.d = int(d)
        for c in self.components:
            if c.out_idx.size and (c.out_idx.min() < 0 or c.out_idx.max() >= d):
                raise ValueError("component output support out of range")

    def evaluate_component(self, j, x):
        """Value of F_j at x as (out_idx, values); costs O(|support|)."""
        if not 0 <= j < self.m:
            raise IndexError(f"component index {j} out of range [0, {self.m})")
        c = self.components[j]
        return c.out_idx, c.evaluate(x)

    def evaluate_full(self, x):
        """Dense F(x) = sum of all components (m component-oracle calls)."""
        out = np.zeros(self.d)
        for c in self.components:
            np.add.at(out, c.out_idx, c.evaluate(x))
        return out


class LipschitzProfile:
    """Per-component Lipschitz constants and the norms that govern complexity."""

    def __init__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0.0) or not np.all(np.isfinite(lam)):
            raise ValueError("component Lipschitz constants must be positive and finite")
        self.lam = lam

    @property
    def m(self):
        return self.lam.size

    @property
    def norm_inf(self):
        return float(np.max(self.lam))

    @property
    def norm_2(self):
        return float(np.sqrt(np.sum(np.square(self.lam))))

    @property
    def norm_1(self):
        return float(np.sum(self.lam))

    @property
    def norm_half(self):
        # (sum_j sqrt(L_j))^2, the quantity the importance-sampled rate scales with
        return float(np.sum(np.sqrt(self.lam)) ** 2)


def _check_distribution(p, m, name):
    p = np.asarray(p, dtype=float)
    if p.shape != (m,):
        raise ValueError(f"{name} must have length {m}")
    if np.any(p <= 0.0):
        raise ValueError(f"{name} entries must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must sum to 1 within 1e-12")
    return p


def lpq_bound(profile, p, q):
    """Worst-case sampling-weighted Lipschitz constant sqrt(sum L_j^2/(p_j q_j^2))."""
    lam = profile.lam if isinstance(profile, LipschitzProfile) else np.asarray(profile, float)
    m = lam.size
    p = _check_distribution(p, m, "p")
    q = _check_distribution(q, m, "q")
    if np.any(lam <= 0.0):
        raise ValueError("Lipschitz constants must be positive")
    return float(np.sqrt(np.sum(np.square(lam) / (p * q * q))))


def lpq_empirical(op, geom, p, q, trials, rng):
    """Empirical lower estimate of the sampling-weighted Lipschitz constant.

    Maximizes sqrt(sum_j ||F_j(x)-F_j(y)||_*^2 / (p_j q_j^2)) / ||x-y|| over
    ``trials`` random feasible pairs drawn from the geometry's domain.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = _check_distribution(p, op.m, "p")
    q = _check_distribution(q, op.m, "q")
    weight = 1.0 / (p * q * q)
    best = -np.inf
    degenerate = 0
    for t in range(trials):
        sharp = bool(t % 2)
        x = geom.sample_domain(rng, sharp=sharp)
        y = geom.sample_domain(rng, sharp=sharp)
        nrm = geom.norm_sq(x - y)
        if nrm <= 0.0:
            degenerate += 1
            continue
        total = 0.0
        for j, c in enumerate(op.components):
            diff = np.zeros(op.d)
            diff[c.out_idx] = c.evaluate(x)
            np.subtract.at(diff, c.out_idx, c.evaluate(y))
            total += weight[j] * geom.dual_norm_sq(diff)
        best = max(best, np.sqrt(total / nrm))
    if not np.isfinite(best):
        raise ValueError("all sampled pairs were degenerate (x == y)")
    return float(best)


def empirical_full_lipschitz(op, geom, trials, rng):
    """Empirical estimate of the full-operator Lipschitz constant."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    best = -np.inf
    for t in range(trials):
        sharp = bool(t % 2)
        x = geom.sample_domain(rng, sharp=sharp)
        y = geom.sample_domain(rng, sharp=sharp)
        nrm = geom.norm_sq(x - y)
        if nrm <= 0.0:
            continue
        diff = op.evaluate_full(x) - op.evaluate_full(y)
        best = max(best, np.sqrt(geom.dual_norm_sq(diff) / nrm))
    if not np.isfinite(best):
        raise ValueError("all sampled pairs were degenerate (x == y)")
    return float(best)


class ComponentTable:
    """SAGA-style table of stored component values plus their running sum.

    Each slot holds F_j evaluated at some past iterate (the iteration id is
    tracked).  ``resolve_prev`` implements the value a component held *two*
    iterations ago, which only differs from the current slot for the single
    component refreshed in the previous iteration; a one-level shadow suffices
    ("shadow" mode, the default).  "stale" mode instead keeps, for every
    component, the value it held before its own latest overwrite, whatever
    iteration that was.
    """

    def __init__(self, op, x0, mode="shadow"):
        if mode not in ("shadow", "stale"):
            raise ValueError("mode must be 'shadow' or 'stale'")
        self.op = op
        self.mode = mode
        self.values = [c.evaluate(x0) for c in op.components]
        self.eval_iter = np.zeros(op.m, dtype=np.int64)
        self.aggregate = np.zeros(op.d)
        for c, v in zip(op.components, self.values):
            np.add.at(self.aggregate, c.out_idx, v)
        self._shadow_iter = -1
        self._shadow_j = -1
        self._shadow_vals = None
        self._stale = [v.copy() for v in self.values] if mode == "stale" else None
        self._refreshes = 0

    def value(self, j):
        return self.values[j]

    def refresh(self, j, vals, k):
        """Overwrite slot j with F_j evaluated at iteration k's iterate."""
        old = self.values[j]
        self._shadow_iter = k
        self._shadow_j = j
        self._shadow_vals = old
        if self._stale is not None:
            self._stale[j] = old
        self.values[j] = vals
        self.eval_iter[j] = k
        # out_idx entries are unique within a component, so plain fancy
        # indexing is a correct (and much faster) scatter-add
        out = self.op.components[j].out_idx
        self.aggregate[out] += vals - old
        self._refreshes += 1
        if self._refreshes % RESUM_PERIOD == 0:
            self.resum()

    def resolve_prev(self, j, k):
        """Stored value of component j as of the end of iteration k-2."""
        if self.mode == "stale":
            return self._stale[j]
        if self._shadow_j == j and self._shadow_iter == k - 1:
            return self._shadow_vals
        return self.values[j]

    def resum(self):
        """Exact re-summation of the aggregate, bounding incremental drift."""
        self.aggregate[:] = 0.0
        for c, v in zip(self.op.components, self.values):
            np.add.at(self.aggregate, c.out_idx, v)

    def explicit_sum(self):
        s = np.zeros(self.op.d)
        for c, v in zip(self.op.components, self.values):
            np.add.at(s, c.out_idx, v)
        return s


def load_matrix_market(path):
    """Read a Matrix Market file into a dense ndarray."""
    mat = mmread(path)
    if hasattr(mat, "toarray"):
        mat = mat.toarray()
    return np.asarray(mat, dtype=float)
