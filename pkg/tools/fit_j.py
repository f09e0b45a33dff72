"""Refit the three J-function constants against numerical quadrature.

Minimizes the maximum absolute error of (1 - 2**(-H1 s**(2 H2)))**H3 over
s in [0.01, 10] and prints the constants used in nbmimo.exit_chart.
"""

import numpy as np
from scipy import integrate, optimize


def j_exact(sigma):
    if sigma < 1e-9:
        return 0.0
    mu = sigma * sigma / 2

    def integrand(l):
        dens = np.exp(-(l - mu) ** 2 / (2 * sigma * sigma)) / np.sqrt(2 * np.pi * sigma * sigma)
        return dens * np.logaddexp(0.0, -l) / np.log(2.0)

    val, _ = integrate.quad(integrand, mu - 12 * sigma, mu + 12 * sigma, limit=200, epsabs=1e-13)
    return 1.0 - val


def model(params, s):
    h1, h2, h3 = params
    return (-np.expm1(-h1 * s ** (2 * h2) * np.log(2.0))) ** h3


def main():
    s = np.linspace(0.01, 10.0, 400)
    ref = np.array([j_exact(v) for v in s])

    def worst(p):
        return np.abs(model(p, s) - ref).max()

    # start from the widely used least-squares constants
    start = np.array([0.3073, 0.8935, 1.1064])
    res = optimize.minimize(worst, start, method="Nelder-Mead",
                            options=dict(xatol=1e-10, fatol=1e-12, maxiter=20000))
    print("H1 = %.8f\nH2 = %.8f\nH3 = %.8f" % tuple(res.x))
    print("max abs error: %.2e (start %.2e)" % (worst(res.x), worst(start)))


if __name__ == "__main__":
    main()
