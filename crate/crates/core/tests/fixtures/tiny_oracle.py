"""Reference optimum of the discrete functional on a 2x4x4 grid.

Solves the same finite-dimensional convex program as the solver, written as a
second-order cone program. Run with `python3 tiny_oracle.py > tiny_oracle.json`.
"""
import json

import cvxpy as cp
import numpy as np

NT, NX, NY = 2, 4, 4
ALPHA, BETA, DELTA = 0.05, 0.01, 1.0
DT, DX, DY = 1.0 / NT, 1.0 / NX, 1.0 / NY


def data():
    x = -0.5 + (np.arange(NX) + 0.5) * DX
    y = -0.5 + (np.arange(NY) + 0.5) * DY
    f = np.empty((NT, NX, NY))
    for k in range(NT):
        f[k] = 1.0 + 0.5 * np.outer(np.sin(2 * np.pi * (x + 0.3 * k)), np.cos(np.pi * y))
    return f


def solve(f):
    rho = cp.Variable((NT + 1, NX * NY))
    mx = [cp.Variable((NX + 1, NY)) for _ in range(NT)]
    my = [cp.Variable((NX, NY + 1)) for _ in range(NT)]
    mu = cp.Variable((NT, NX * NY))
    cons = []
    energy = 0
    mass = 0
    misfit = 0
    for k in range(NT):
        cons += [mx[k][0, :] == 0, mx[k][NX, :] == 0, my[k][:, 0] == 0, my[k][:, NY] == 0]
        div = (mx[k][1:, :] - mx[k][:-1, :]) / DX + (my[k][:, 1:] - my[k][:, :-1]) / DY
        cons.append((rho[k + 1] - rho[k]) / DT + cp.reshape(div, (NX * NY,), order="C") - mu[k] == 0)
        rc = 0.5 * (rho[k] + rho[k + 1])
        mxc = cp.reshape(0.5 * (mx[k][1:, :] + mx[k][:-1, :]), (NX * NY,), order="C")
        myc = cp.reshape(0.5 * (my[k][:, 1:] + my[k][:, :-1]), (NX * NY,), order="C")
        for c in range(NX * NY):
            v = cp.hstack([mxc[c], myc[c], DELTA * mu[k, c]])
            energy += cp.quad_over_lin(v, 2 * rc[c])
        mass += cp.sum(cp.abs(rc))
        misfit += cp.sum_squares(rc - f[k].reshape(-1))
    vol = DT * DX * DY
    objective = 0.5 * DT * DX * DY * misfit + ALPHA * vol * energy + BETA * vol * mass
    prob = cp.Problem(cp.Minimize(objective), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.value, prob.status


if __name__ == "__main__":
    value, status = solve(data())
    print(json.dumps({"nt": NT, "nx": NX, "ny": NY, "alpha": ALPHA, "beta": BETA, "delta": DELTA,
                      "status": status, "objective": value}, indent=2))
