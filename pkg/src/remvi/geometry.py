"""Block-separable geometries: norms, Bregman divergences, and prox solvers.

A geometry is a partition of the coordinates {0, ..., d-1} into blocks, each
carrying a norm, a simple regularizer, and an anchor point.  Two block kinds
cover every setup used by the solvers:

* ``euclidean``: (optionally weighted) squared-Euclidean divergence
  D(u, x0) = 1/2 sum_i w_i (u_i - x0_i)^2, regularizer mu/2 ||u||_2^2 plus an
  optional box indicator.  Primal norm sum w_i u_i^2, dual norm sum v_i^2/w_i.
* ``entropy``: KL divergence on the probability simplex with the simplex
  indicator as regularizer.  Primal norm ||u||_1, dual norm ||v||_inf.

The composite primal norm is ||x||^2 = sum_blocks ||x_block||^2_block, and the
divergence is 1-strongly convex with respect to it (exactly for Euclidean
blocks, by Pinsker's inequality for entropy blocks).

The central subproblem solved here is the dual-averaging prox

    argmin_u  <z, u> + A * g(u) + D(u, x0)

restricted to a block; every supported combination has a closed form.
"""

from __future__ import annotations

import numpy as np

# Tolerance for domain-membership validation; lazy catch-up accumulates
# floating error of roughly this order over long runs.
DOMAIN_TOL = 1e-9


class Block:
    """One coordinate block of a geometry.

    Parameters
    ----------
    idx : array of coordinate indices owned by the block (disjoint across blocks)
    kind : "euclidean" or "entropy"
    anchor : block anchor x0 (interior of the simplex for entropy blocks)
    weights : positive per-coordinate weights, Euclidean blocks only
    mu : quadratic regularizer strength (gamma contribution), Euclidean only
    lo, hi : optional box bounds, Euclidean only
    """

    __slots__ = ("idx", "kind", "anchor", "weights", "mu", "lo", "hi",
                 "log_anchor")

    def __init__(self, idx, kind, anchor, weights=None, mu=0.0, lo=None, hi=None):
        self.idx = np.asarray(idx, dtype=np.intp)
        if kind not in ("euclidean", "entropy"):
            raise ValueError(f"unknown block kind {kind!r}")
        self.kind = kind
        self.anchor = np.asarray(anchor, dtype=float)
        if self.anchor.shape != self.idx.shape:
            raise ValueError("anchor shape must match block size")
        if kind == "entropy":
            if weights is not None or mu != 0.0 or lo is not None or hi is not None:
                raise ValueError("entropy blocks take no weights, mu, or bounds")
            if np.any(self.anchor <= 0.0):
                raise ValueError("entropy anchor must be interior (all positive)")
            if abs(self.anchor.sum() - 1.0) > DOMAIN_TOL:
                raise ValueError("entropy anchor must lie on the simplex")
            self.weights = None
            self.mu = 0.0
            self.lo = None
            self.hi = None
            self.log_anchor = np.log(self.anchor)
        else:
            self.log_anchor = None
            if weights is not None:
                weights = np.asarray(weights, dtype=float)
                if weights.shape != self.idx.shape:
                    raise ValueError("weights shape must match block size")
                if np.any(weights <= 0.0):
                    raise ValueError("weights must be strictly positive")
            self.weights = weights
            if mu < 0.0:
                raise ValueError("quadratic strength mu must be >= 0")
            self.mu = float(mu)
            self.lo = None if lo is None else np.broadcast_to(
                np.asarray(lo, dtype=float), self.idx.shape).copy()
            self.hi = None if hi is None else np.broadcast_to(
                np.asarray(hi, dtype=float), self.idx.shape).copy()

    @property
    def size(self):
        return self.idx.size


def euclidean_block(idx, anchor=None, weights=None, mu=0.0, lo=None, hi=None):
    idx = np.asarray(idx, dtype=np.intp)
    if anchor is None:
        anchor = np.zeros(idx.size)
    return Block(idx, "euclidean", anchor, weights=weights, mu=mu, lo=lo, hi=hi)


def simplex_block(idx, anchor=None):
    """Entropy-geometry simplex block; the anchor defaults to the uniform vector."""
    idx = np.asarray(idx, dtype=np.intp)
    if anchor is None:
        anchor = np.full(idx.size, 1.0 / idx.size)
    return Block(idx, "entropy", anchor)


def _check_finite(v, what):
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{what} must be finite")


def _entropy_prox(anchor, z, log_anchor=None):
    # Computed in log-space with max-subtraction: z accumulates over many
    # iterations and exp(-z) overflows otherwise.
    logits = (np.log(anchor) if log_anchor is None else log_anchor) - z
    logits -= logits.max()
    u = np.exp(logits)
    u /= u.sum()
    return u


def _kl(x, y):
    pos = x > 0.0
    return float(np.sum(x[pos] * np.log(x[pos] / y[pos])))


class GeometryBundle:
    """A full-space geometry assembled from disjoint blocks covering 0..d-1."""

    def __init__(self, blocks, d=None):
        if not blocks:
            raise ValueError("need at least one block")
        self.blocks = list(blocks)
        all_idx = np.concatenate([b.idx for b in self.blocks])
        d_seen = all_idx.size
        if d is None:
            d = d_seen
        cover = np.zeros(d, dtype=bool)
        if np.any(all_idx < 0) or np.any(all_idx >= d):
            raise ValueError("block indices out of range")
        cover[all_idx] = True
        if d_seen != d or not cover.all():
            raise ValueError("blocks must disjointly cover all coordinates")
        self.d = d
        # gamma is the strong convexity the regularizer provides on the whole
        # space: the min over blocks (indicator-only blocks contribute 0).
        self.gamma = min(b.mu for b in self.blocks)

        self.x0 = np.zeros(d)
        for b in self.blocks:
            self.x0[b.idx] = b.anchor

        # Vectorized full-space parameter arrays for the Euclidean coordinates.
        eu = [b for b in self.blocks if b.kind == "euclidean"]
        if eu:
            self._eu_idx = np.concatenate([b.idx for b in eu])
            self._eu_w = np.concatenate(
                [b.weights if b.weights is not None else np.ones(b.size) for b in eu])
            self._eu_mu = np.concatenate([np.full(b.size, b.mu) for b in eu])
            self._eu_lo = np.concatenate(
                [b.lo if b.lo is not None else np.full(b.size, -np.inf) for b in eu])
            self._eu_hi = np.concatenate(
                [b.hi if b.hi is not None else np.full(b.size, np.inf) for b in eu])
        else:
            self._eu_idx = np.empty(0, dtype=np.intp)
            self._eu_w = self._eu_mu = self._eu_lo = self._eu_hi = np.empty(0)
        self._ent_blocks = [b for b in self.blocks if b.kind == "entropy"]
        if self._ent_blocks:
            self._ent_idx = np.concatenate([b.idx for b in self._ent_blocks])
            self._ent_log_anchor = np.concatenate(
                [b.log_anchor for b in self._ent_blocks])
            sizes = np.array([b.size for b in self._ent_blocks])
            self._ent_starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
            self._ent_sizes = sizes
        else:
            self._ent_idx = np.empty(0, dtype=np.intp)
        self._coord_block = np.empty(d, dtype=np.intp)
        for bi, b in enumerate(self.blocks):
            self._coord_block[b.idx] = bi

    # -- block-level operations -------------------------------------------

    def prox_block(self, block, z_block, A, x0_block=None):
        """argmin_u <z, u> + A g(u) + D(u, x0) over one block, in closed form."""
        b = self.blocks[block] if isinstance(block, (int, np.integer)) else block
        z_block = np.asarray(z_block, dtype=float)
        _check_finite(z_block, "prox input z")
        if A < 0.0:
            raise ValueError("step-size sum A must be >= 0")
        if b.kind == "entropy":
            if x0_block is None:
                return _entropy_prox(b.anchor, z_block, log_anchor=b.log_anchor)
            x0 = np.asarray(x0_block, dtype=float)
            if np.any(x0 <= 0.0):
                raise ValueError("entropy prox anchor must be interior")
            return _entropy_prox(x0, z_block)
        x0 = b.anchor if x0_block is None else np.asarray(x0_block, dtype=float)
        w = b.weights if b.weights is not None else 1.0
        u = (w * x0 - z_block) / (w + A * b.mu)
        if b.lo is not None or b.hi is not None:
            lo = -np.inf if b.lo is None else b.lo
            hi = np.inf if b.hi is None else b.hi
            u = np.clip(u, lo, hi)
        return u

    def block_norm_sq(self, block, x_block):
        b = self.blocks[block] if isinstance(block, (int, np.integer)) else block
        if b.kind == "entropy":
            return float(np.sum(np.abs(x_block))) ** 2
        w = b.weights if b.weights is not None else 1.0
        return float(np.sum(w * np.square(x_block)))

    def block_dual_norm_sq(self, block, v_block):
        b = self.blocks[block] if isinstance(block, (int, np.integer)) else block
        if b.kind == "entropy":
            return float(np.max(np.abs(v_block))) ** 2 if len(v_block) else 0.0
        w = b.weights if b.weights is not None else 1.0
        return float(np.sum(np.square(v_block) / w))

    def block_bregman(self, block, x_block, y_block):
        b = self.blocks[block] if isinstance(block, (int, np.integer)) else block
        if b.kind == "entropy":
            x_block = np.asarray(x_block, dtype=float)
            y_block = np.asarray(y_block, dtype=float)
            if np.any(x_block < -DOMAIN_TOL) or abs(x_block.sum() - 1.0) > 1e-6:
                raise ValueError("first argument outside the simplex")
            if np.any(y_block <= 0.0):
                raise ValueError("entropy divergence needs interior second argument")
            return _kl(np.maximum(x_block, 0.0), y_block)
        w = b.weights if b.weights is not None else 1.0
        diff = np.asarray(x_block, dtype=float) - np.asarray(y_block, dtype=float)
        return 0.5 * float(np.sum(w * np.square(diff)))

    # -- full-space operations --------------------------------------------

    def prox_full(self, z, A, anchor=None, check=True):
        """Full-vector prox: one vectorized pass over all Euclidean
        coordinates and one segmented pass over the entropy blocks (each
        simplex needs its own normalization)."""
        if check:
            _check_finite(z, "prox input z")
            if A < 0.0:
                raise ValueError("step-size sum A must be >= 0")
        x0 = self.x0 if anchor is None else anchor
        out = np.empty(self.d)
        if self._eu_idx.size:
            ei = self._eu_idx
            u = (self._eu_w * x0[ei] - z[ei]) / (self._eu_w + A * self._eu_mu)
            np.clip(u, self._eu_lo, self._eu_hi, out=u)
            out[ei] = u
        if self._ent_idx.size:
            if anchor is None:
                logits = self._ent_log_anchor - z[self._ent_idx]
            else:
                a = x0[self._ent_idx]
                if np.any(a <= 0.0):
                    raise ValueError("entropy prox anchor must be interior")
                logits = np.log(a) - z[self._ent_idx]
            starts = self._ent_starts
            logits -= np.repeat(np.maximum.reduceat(logits, starts), self._ent_sizes)
            u = np.exp(logits)
            u /= np.repeat(np.add.reduceat(u, starts), self._ent_sizes)
            out[self._ent_idx] = u
        return out

    def bregman(self, x, y):
        """Composite divergence D(x, y) = sum over blocks; >= 1/2 ||x-y||^2."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_finite(x, "bregman x")
        _check_finite(y, "bregman y")
        total = 0.0
        if self._eu_idx.size:
            ei = self._eu_idx
            total += 0.5 * float(np.sum(self._eu_w * np.square(x[ei] - y[ei])))
        for b in self._ent_blocks:
            total += self.block_bregman(b, x[b.idx], y[b.idx])
        return total

    def norm_sq(self, x):
        total = 0.0
        if self._eu_idx.size:
            total += float(np.sum(self._eu_w * np.square(x[self._eu_idx])))
        for b in self._ent_blocks:
            total += float(np.sum(np.abs(x[b.idx]))) ** 2
        return total

    def dual_norm_sq(self, v):
        _check_finite(v, "dual norm input")
        total = 0.0
        if self._eu_idx.size:
            total += float(np.sum(np.square(v[self._eu_idx]) / self._eu_w))
        for b in self._ent_blocks:
            total += float(np.max(np.abs(v[b.idx]))) ** 2 if b.size else 0.0
        return total

    def g_value(self, x, check=True):
        """Regularizer value sum_b mu_b/2 ||x_b||_2^2; indicator parts are 0 on
        the domain.  Raises on domain violations when ``check`` is set."""
        if check:
            self.validate_domain(x)
        total = 0.0
        if self._eu_idx.size:
            total += 0.5 * float(np.sum(self._eu_mu * np.square(x[self._eu_idx])))
        return total

    def validate_domain(self, x, tol=DOMAIN_TOL):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("point has non-finite entries")
        if self._eu_idx.size:
            xe = x[self._eu_idx]
            if np.any(xe < self._eu_lo - tol) or np.any(xe > self._eu_hi + tol):
                raise ValueError("point violates box bounds")
        for b in self._ent_blocks:
            xb = x[b.idx]
            if np.any(xb < -tol) or abs(xb.sum() - 1.0) > max(tol, 1e-8):
                raise ValueError("point outside the probability simplex")

    def feasible(self, x, tol=DOMAIN_TOL):
        try:
            self.validate_domain(x, tol=tol)
        except ValueError:
            return False
        return True

    def sample_domain(self, rng, sharp=False):
        """Random feasible point: Dirichlet on simplexes, uniform on boxes,
        standard normal on unconstrained coordinates (around the anchor).

        ``sharp`` biases draws toward extreme points (simplex vertices, box
        corners, sparse free directions); empirical Lipschitz estimation
        needs such pairs to approach the worst case.
        """
        x = np.empty(self.d)
        if self._eu_idx.size:
            ei = self._eu_idx
            lo, hi = self._eu_lo, self._eu_hi
            bounded = np.isfinite(lo) & np.isfinite(hi)
            vals = self.x0[ei] + rng.standard_normal(ei.size)
            if sharp:
                mask = rng.random(ei.size) < max(2.0 / ei.size, 0.05)
                vals = np.where(mask, vals * 3.0, self.x0[ei])
            if bounded.any():
                if sharp:
                    corner = np.where(rng.random(ei.size) < 0.5, lo, hi)
                    vals = np.where(bounded, np.where(
                        rng.random(ei.size) < 0.5, corner, vals), vals)
                else:
                    u = rng.random(ei.size)
                    lo_b = np.where(bounded, lo, 0.0)
                    span = np.where(bounded, hi - lo, 0.0)
                    vals = np.where(bounded, lo_b + u * span, vals)
            vals = np.clip(vals, lo, hi)
            x[ei] = vals
        alpha = 0.07 if sharp else 1.0
        for b in self._ent_blocks:
            x[b.idx] = np.maximum(rng.dirichlet(np.full(b.size, alpha)), 1e-300)
        return x


def prox_step(geom, block, z_block, A, x0_block=None):
    """Module-level alias for the per-block dual-averaging prox."""
    return geom.prox_block(block, z_block, A, x0_block=x0_block)


def bregman(geom, x, y):
    return geom.bregman(x, y)


def dual_norm_sq(geom, v):
    return geom.dual_norm_sq(v)
