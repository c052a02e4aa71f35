"""Integer-order reference run of the first example network.

With order 1, no neutral term and exponential kernels, each distributed
delay w(t) = int_0^inf e^{-l s} g(v(t - s)) ds obeys w' = -l w + g(v(t)),
with w(0) = g(phi) / l for a constant history. The augmented ODE is solved
with scipy's DOP853 at tight tolerances. Writes t,x1,x2,y1,y2 every 0.25.
"""
import sys

import numpy as np
from scipy.integrate import solve_ivp

A = np.array([5.0, 7.0])
A_BAR = np.array([6.0, 8.0])
I = np.array([1.0, 0.75])
J = np.array([0.5, 1.0])
D = np.zeros((2, 2, 2))  # [q, p, s]
for (q, p, s), v in {(1, 1, 1): 1.3, (1, 1, 2): 0.5, (2, 1, 1): 1.0, (2, 1, 2): 0.25,
                     (1, 2, 1): 0.75, (1, 2, 2): 1.0, (2, 2, 1): 0.5, (2, 2, 2): 0.4}.items():
    D[q - 1, p - 1, s - 1] = v
D_BAR = np.zeros((2, 2, 2))  # [p, q, r]
for (p, q, r), v in {(1, 1, 1): 0.6, (1, 1, 2): 1.0, (2, 1, 1): 0.5, (2, 1, 2): 0.25,
                     (1, 2, 1): 1.0, (1, 2, 2): 1.4, (2, 2, 1): 0.75, (2, 2, 2): 1.25}.items():
    D_BAR[p - 1, q - 1, r - 1] = v
RATE, RATE_BAR = 5.0, 6.0


def rhs(_t, u):
    x, y, w, wb = u[0:2], u[2:4], u[4:6], u[6:8]
    dx = -A * x + I + np.einsum("qps,q,s->p", D, w, w)
    dy = -A_BAR * y + J + np.einsum("pqr,p,r->q", D_BAR, wb, wb)
    dw = -RATE * w + np.tanh(y)
    dwb = -RATE_BAR * wb + np.tanh(x)
    return np.concatenate([dx, dy, dw, dwb])


def main():
    x0 = np.array([-0.5, -1.0])
    y0 = np.array([-0.75, -1.5])
    u0 = np.concatenate([x0, y0, np.tanh(y0) / RATE, np.tanh(x0) / RATE_BAR])
    ts = np.linspace(0.0, 10.0, 41)
    sol = solve_ivp(rhs, (0.0, 10.0), u0, method="DOP853", t_eval=ts, rtol=1e-13, atol=1e-15)
    if not sol.success:
        sys.exit(sol.message)
    out = sys.stdout
    out.write("t,x1,x2,y1,y2\n")
    for i, t in enumerate(sol.t):
        out.write(",".join(f"{v:.17g}" for v in [t, *sol.y[0:4, i]]) + "\n")


if __name__ == "__main__":
    main()
