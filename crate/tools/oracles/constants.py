"""Reference constants for the two bundled networks.

Everything is evaluated directly from the closed-form definitions with mpmath at
30 digits, independently of the Rust code. Equilibria come from a plain
damped fixed-point loop. Writes name=value lines to stdout.
"""
from itertools import product

from mpmath import asinh, gamma, mp, mpf, nstr, tanh

mp.dps = 30

DELTA = mpf("0.9")
MU = mpf(1)
A = [mpf(5), mpf(7)]
A_BAR = [mpf(6), mpf(8)]
I = [mpf(1), mpf("0.75")]
J = [mpf("0.5"), mpf(1)]
# d[(q, p, s)] and d_bar[(p, q, r)], 1-based as written
D = {(1, 1, 1): "1.3", (1, 1, 2): "0.5", (2, 1, 1): "1", (2, 1, 2): "0.25",
     (1, 2, 1): "0.75", (1, 2, 2): "1", (2, 2, 1): "0.5", (2, 2, 2): "0.4"}
D_BAR = {(1, 1, 1): "0.6", (1, 1, 2): "1", (2, 1, 1): "0.5", (2, 1, 2): "0.25",
         (1, 2, 1): "1", (1, 2, 2): "1.4", (2, 2, 1): "0.75", (2, 2, 2): "1.25"}
D = {k: mpf(v) for k, v in D.items()}
D_BAR = {k: mpf(v) for k, v in D_BAR.items()}
# masses of e^{-5t} and e^{-6t}
KH = mpf(1) / 5
KH_BAR = mpf(1) / 6
HIST_X = [mpf("-0.5"), mpf(-1)]
HIST_Y = [mpf("-0.75"), mpf("-1.5")]


def equilibrium(g):
    x = [mpf(0), mpf(0)]
    y = [mpf(0), mpf(0)]
    for _ in range(2000):
        fx = [-A[p] * x[p] + I[p] + sum(D[(q + 1, p + 1, s + 1)] * KH * KH * g(y[q]) * g(y[s])
                                        for q, s in product(range(2), range(2)))
              for p in range(2)]
        fy = [-A_BAR[q] * y[q] + J[q] + sum(D_BAR[(p + 1, q + 1, r + 1)] * KH_BAR * KH_BAR * g(x[p]) * g(x[r])
                                            for p, r in product(range(2), range(2)))
              for q in range(2)]
        res = max(abs(v) for v in fx + fy)
        if res < mpf(10) ** -25:
            break
        x = [x[p] + mpf("0.5") * fx[p] / A[p] for p in range(2)]
        y = [y[q] + mpf("0.5") * fy[q] / A_BAR[q] for q in range(2)]
    return x, y, res


def base(delta, mu, a, a_bar, c, c_bar):
    amin, abmin = min(a), min(a_bar)
    xi = min(amin, abmin)
    a_star = max(amin, abmin)
    c_star = max(c, c_bar)
    gp = gamma(1 + delta) * gamma(1 - delta)
    f = 1 / (xi * mu ** delta) + 2 ** delta * gamma(1 - delta)
    b = 1 + xi * gamma(1 - delta) * (2 * mu) ** delta
    b_star = max(b, f)
    a_sum = max(sum(a), sum(a_bar))
    u = a_sum * gp / xi
    g3 = (1 + gp) * f * a_star * c_star / xi
    return dict(xi=xi, a_star=a_star, c_star=c_star, F=f, B=b, B_star=b_star, U=u, G3=g3,
                budget=1 - g3, c_threshold=1 / (2 * b_star * (1 + u)),
                c_flip=xi / (a_star * f * (1 + gp)))


def emit(name, value):
    print(f"{name}={nstr(value, 20)}")


def main():
    c = mpf("1e-4")
    ex1 = base(DELTA, MU, A, A_BAR, c, c)
    for key in ("xi", "a_star", "c_star", "F", "B", "B_star", "U", "G3", "budget", "c_flip"):
        emit(f"example1.{key}", ex1[key])
    emit("example1_c05.G3", base(DELTA, MU, A, A_BAR, mpf("0.5"), mpf("0.5"))["G3"])
    for beta in (0, 1, 2, 5, 10):
        aug = base(DELTA, MU, [v + beta for v in A], [v + beta for v in A_BAR], c, c)
        emit(f"gains{beta}.xi", aug["xi"])
        emit(f"gains{beta}.G3", aug["G3"])

    # bounded aggregate kernel at t = 0 (k = h = 1 there), G = L = M = 1 for tanh
    k0 = sum(D[(q, p, s)] * KH + D[(s, p, q)] * KH for q, p, s in product((1, 2), (1, 2), (1, 2)))
    k0_bar = sum(D_BAR[(p, q, r)] * KH_BAR + D_BAR[(r, q, p)] * KH_BAR
                 for p, q, r in product((1, 2), (1, 2), (1, 2)))
    emit("example1.K0", max(k0, k0_bar))

    xs, ys, res = equilibrium(tanh)
    for i, v in enumerate(xs + ys):
        emit(f"tanh.eq{i + 1}", v)
    xa, ya, res = equilibrium(asinh)
    for i, v in enumerate(xa + ya):
        emit(f"asinh.eq{i + 1}", v)

    # unbounded-case constants with asinh (L = M = 1), |d| and |g(eq)|
    gy = [abs(asinh(v)) for v in ya]
    gx = [abs(asinh(v)) for v in xa]
    theta = sum(abs(D[(q, p, s)]) * (KH * gy[s - 1] + KH * gy[q - 1])
                for q, p, s in product((1, 2), (1, 2), (1, 2)))
    theta_bar = sum(abs(D_BAR[(p, q, r)]) * (KH_BAR * gx[r - 1] + KH_BAR * gx[p - 1])
                    for p, q, r in product((1, 2), (1, 2), (1, 2)))
    nu = sum(abs(v) for v in D.values())
    nu_bar = sum(abs(v) for v in D_BAR.values())
    pi_const = max(theta, theta_bar)
    emit("example2.theta", theta)
    emit("example2.theta_bar", theta_bar)
    emit("example2.kappa", max(nu, nu_bar))
    emit("example2.pi", pi_const)
    emit("example2.omega_budget", 1 / (4 * pi_const))
    emit("example2.c_threshold", ex1["c_threshold"])
    v0 = max(sum(abs(h - e) for h, e in zip(HIST_X, xa)), sum(abs(h - e) for h, e in zip(HIST_Y, ya)))
    emit("example2.v0", v0)

    gam, r = mpf("0.9"), mpf(5)
    emit("halanay.V", 1 / (r * MU ** gam) + 2 ** gam * gamma(1 - gam))
    emit("halanay.B", 1 + r * gamma(1 - gam) * (2 * MU) ** gam)


if __name__ == "__main__":
    main()
