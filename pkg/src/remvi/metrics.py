"""Gap and distance evaluation.

Two error notions are tracked: the gap against a fixed comparator

    gap_fixed(x_hat, x) = <F(x), x_hat - x> - g(x) + g(x_hat),

whose supremum over the domain is the convergence certificate in the merely
monotone regime (closed forms live with the problem families), and the squared
problem-norm distance to a known solution for strongly monotone instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class EvalRecord:
    """One time-stamped measurement along a solver trace."""

    iteration: int
    oracle_calls: int
    elapsed_ns: int
    gap_fixed: float | None = None
    sup_gap: float | None = None
    dist_sq: float | None = None

    def metric_dict(self):
        return {"gap_fixed": self.gap_fixed, "sup_gap": self.sup_gap,
                "dist_sq": self.dist_sq}


def gap_fixed(problem, candidate, comparator):
    """Gap of ``candidate`` against an arbitrary but fixed feasible comparator."""
    geom = problem.geometry
    candidate = np.asarray(candidate, dtype=float)
    comparator = np.asarray(comparator, dtype=float)
    geom.validate_domain(candidate, tol=1e-7)
    try:
        g_comp = geom.g_value(comparator)
    except ValueError as exc:
        raise ValueError(f"infeasible comparator: {exc}") from exc
    g_cand = geom.g_value(candidate, check=False)
    F_comp = problem.operator.evaluate_full(comparator)
    return float(F_comp @ (candidate - comparator) - g_comp + g_cand)


def dist_sq(problem, x, reference=None):
    """Squared problem-norm distance to the reference solution."""
    ref = problem.reference if reference is None else reference
    if ref is None:
        raise ValueError(f"no reference solution available for {problem.family!r}")
    return problem.geometry.norm_sq(np.asarray(x, dtype=float) - ref)


def default_metrics(problem):
    """The metrics a family supports out of the box."""
    metrics = []
    if problem.family in ("matrix-game", "box-simplex"):
        metrics.append("sup_gap")
    if problem.family == "lad" and problem.ref_optimum is not None:
        metrics.append("sup_gap")
    if problem.reference is not None:
        metrics.append("dist_sq")
    return tuple(metrics)


def evaluate_point(problem, x, which, comparator=None):
    """Evaluate the requested metrics at a point; returns a dict."""
    out = {}
    for name in which:
        if name == "sup_gap":
            out["sup_gap"] = problem.sup_gap(x)
        elif name == "dist_sq":
            out["dist_sq"] = dist_sq(problem, x)
        elif name == "gap_fixed":
            if comparator is None:
                raise ValueError("gap_fixed needs a comparator point")
            out["gap_fixed"] = gap_fixed(problem, x, comparator)
        else:
            raise ValueError(f"unknown metric {name!r}")
    return out
