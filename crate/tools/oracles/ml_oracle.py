"""High-precision Mittag-Leffler reference values.

Sums E_{a,b}(z) = sum_k z^k / Gamma(a k + b) with mpmath. The largest term
of the alternating series is about exp(|z|^(1/a)), so the working precision
is 60 digits plus the digits that cancellation eats. Terms are summed until
they fall below 1e-50. A handful of closed forms cover large |z|.
Writes delta,rho,z,value rows.
"""
import math
import random
import sys

from mpmath import erfc, exp, expm1, mp, mpf, nstr, rgamma


def ml_series(a, b, z):
    x = abs(float(z))
    growth = x ** (1.0 / float(a)) if x > 0 else 0.0
    mp.dps = 60 + int(growth / math.log(10))
    a, b, z = mpf(a), mpf(b), mpf(z)
    total = mpf(0)
    term_pow = mpf(1)
    k = 0
    tiny = mpf(10) ** -50
    quiet = 0
    while True:
        term = term_pow * rgamma(a * k + b)
        total += term
        if abs(term) < tiny and k > growth:
            quiet += 1
            if quiet > 5:
                break
        else:
            quiet = 0
        term_pow *= z
        k += 1
    return total


def points():
    pts = [
        ("0.9", "1", "-5"),
        ("0.9", "0.9", "-2"),
        ("1", "1", "-1"),
        ("1", "2", "-1"),
    ]
    rng = random.Random(20240611)
    deltas = ["0.1", "0.25", "0.3", "0.5", "0.6", "0.75", "0.8", "0.9", "0.95", "1"]
    while len(pts) < 50:
        d = rng.choice(deltas)
        rho = rng.choice(["1", "1", d, "2", "0.5", "1.7"])
        df = float(d)
        # cap the cancellation growth so the reference stays affordable
        xmax = min(200.0, 300.0 ** df)
        kind = rng.random()
        if kind < 0.15:
            z = rng.uniform(0.0, 10.0 if df >= 0.5 else 1.5)
        elif kind < 0.5:
            z = -rng.uniform(0.0, min(6.0, xmax))
        else:
            z = -rng.uniform(min(6.0, xmax), xmax)
        pts.append((d, rho, repr(round(z, 6))))
    return pts


def closed_forms():
    # E_{1/2}(-x) = exp(x^2) erfc(x); E_{1,2}(z) = (e^z - 1) / z
    mp.dps = 60
    rows = []
    for x in ["10", "50", "200", "1000", "40000"]:
        rows.append(("0.5", "1", "-" + x, erfc(mpf(x)) * exp(mpf(x) ** 2)))
    for z in ["-300", "-30", "25"]:
        rows.append(("1", "2", z, expm1(mpf(z)) / mpf(z)))
    return rows


def main():
    out = sys.argv[1]
    with open(out, "w") as fh:
        fh.write("delta,rho,z,value\n")
        for d, rho, z in points():
            v = ml_series(d, rho, z)
            fh.write(f"{d},{rho},{z},{nstr(v, 30, min_fixed=-1, max_fixed=-1)}\n")
        for d, rho, z, v in closed_forms():
            fh.write(f"{d},{rho},{z},{nstr(v, 30, min_fixed=-1, max_fixed=-1)}\n")


if __name__ == "__main__":
    main()
