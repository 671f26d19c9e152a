"""Freezes convex-solver minimizers used by the prox tests.

Regenerate with:  python3 tests/oracles/gen_convex_oracles.py > tests/oracles/convex_oracles.inc
Requires numpy and cvxpy (Clarabel backend).
"""
import cvxpy as cp
import numpy as np


def solve(objective_fn, shape):
    var = cp.Variable(shape)
    prob = cp.Problem(cp.Minimize(objective_fn(var)))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12,
               tol_feas=1e-12, tol_ktratio=1e-10, max_iter=500)
    assert prob.status == cp.OPTIMAL, prob.status
    return var.value


def emit(name, M):
    rows, cols = M.shape
    vals = ", ".join(repr(float(v)) for v in M.flatten(order="C"))
    print(f"inline const RowMajorLiteral {name}{{{rows}, {cols}, {{{vals}}}}};")


rng = np.random.default_rng(20240611)

# Nuclear-norm prox: argmin tau ||X||_* + 1/2 ||X - A||_F^2, A 6x4, tau = 0.2.
A = rng.standard_normal((6, 4))
tau = 0.2
svt = solve(lambda X: tau * cp.normNuc(X) + 0.5 * cp.sum_squares(X - A), A.shape)

# J-subproblem: argmin ||J||_* + <T2, X - J> + mu/2 ||X - J||_F^2, 5x8, mu = 2.
X = rng.standard_normal((5, 8))
T2 = rng.standard_normal((5, 8))
mu = 2.0
jsub = solve(lambda J: cp.normNuc(J) + cp.sum(cp.multiply(T2, X - J))
             + mu / 2 * cp.sum_squares(X - J), X.shape)

print("// Generated by gen_convex_oracles.py; do not edit.")
print(f"inline constexpr double kSvtTau = {tau!r};")
emit("kSvtInput", A)
emit("kSvtExpected", svt)
print(f"inline constexpr double kJMu = {mu!r};")
emit("kJX", X)
emit("kJT2", T2)
emit("kJExpected", jsub)
