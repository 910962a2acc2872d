"""Policy evaluation with linear value-function approximation.

The fixed-point problem is posed as a strongly monotone GMVI: the operator
keeps the monotone part and the strong convexity mu sits in the quadratic
regularizer.  With gamma = mu > 0 the step sizes grow geometrically and the
squared distance to the direct linear-system solution decays linearly,
matching the 4 D(x*, x0) / (A_k gamma + 1) envelope.
"""

import numpy as np

from remvi import (SolverConfig, dist_sq, generate_instance, problem_plan,
                   run_dense, solve_policy_eval_direct)

inst = generate_instance("policy-eval", 10, 5, 0.0, seed=1, out_degree=2,
                         beta=0.3, sym_margin=1.5, reward_scale=0.2)
data = inst.data
print(f"chain with {inst.m} transition pairs, features in R^5, "
      f"beta = {data['beta']}, mu = {data['mu']}")
x_star = solve_policy_eval_direct(data["P"], data["Phi"], data["R"],
                                  data["beta"])
print(f"direct solve x* = {np.round(x_star, 4)}\n")

plan = problem_plan(inst)
cfg = SolverConfig(iterations=12000, seed=0, mode="dense", eval_stride=1500,
                   eval_metrics=("dist_sq",))
trace = run_dense(inst, plan, cfg)

D = inst.geometry.bregman(x_star, inst.x0)
A = np.concatenate([[0.0], np.cumsum(trace.a_seq)])
print("distance to x* against the linear-rate envelope:")
print(f"  {'k':>6}   {'dist^2':>12}   {'4D/(A_k mu + 1)':>16}")
for rec in trace.records[1:]:
    envelope = 4.0 * D / (A[rec.iteration] * inst.gamma + 1.0)
    print(f"  {rec.iteration:6d}   {rec.dist_sq:12.3e}   {envelope:16.3e}")

final = np.sqrt(dist_sq(inst, trace.final_x))
print(f"\nfinal iterate distance to the direct solve: {final:.2e}")
