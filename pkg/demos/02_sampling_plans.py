"""Sampling plans and the constant that drives step sizes.

The solver draws two component indices per iteration: the extrapolation index
from p and the table-refresh index from q.  The induced constant
L_pq = sqrt(sum_j L_j^2 / (p_j q_j^2)) controls the step size, so nonuniform
Lipschitz profiles reward importance sampling: p proportional to sqrt(L_j)
and q clipped from below at the mean keep L_pq near (sum_j sqrt(L_j))^2
while guaranteeing min_j q_j >= 1/(2m).
"""

import numpy as np

from remvi import LipschitzProfile, RngStream, build_plan, lpq_bound

rng = np.random.default_rng(0)
m = 12
for label, lam in [
        ("uniform profile", np.full(m, 2.0)),
        ("mildly nonuniform", np.sort(rng.uniform(0.1, 4.0, m))[::-1]),
        ("power law (rank^-3)", (np.arange(1, m + 1) / m) ** -3.0 / m ** 3)]:
    prof = LipschitzProfile(lam)
    uni = build_plan("uniform", profile=prof)
    imp = build_plan("importance", profile=prof)
    print(f"{label}:")
    print(f"  |lam|_inf = {prof.norm_inf:.3f}   |lam|_1 = {prof.norm_1:.3f}   "
          f"(sum sqrt)^2 = {prof.norm_half:.3f}")
    print(f"  L_pq uniform    = {uni.lpq:10.3f}")
    print(f"  L_pq importance = {imp.lpq:10.3f}   "
          f"q_min * 2m = {imp.q_min * 2 * m:.3f} (>= 1 guaranteed)\n")

# alias tables draw in O(1); the stream is counted and replayable
plan = build_plan("importance",
                  profile=LipschitzProfile(rng.uniform(0.5, 8.0, 6)))
stream = RngStream(seed=42)
draws = [plan.sample_p(stream) for _ in range(12)]
print(f"twelve draws from p = {np.round(plan.p, 3)}: {draws}")
replay = RngStream(seed=42)
replay.jump_to(6)
print(f"replay of draw #7 from the counter alone: {plan.sample_p(replay)} "
      f"(original {draws[6]})")
