"""Reference values for the Mittag-Leffler tests, by direct high-precision
summation of the defining series."""

import mpmath as mp

mp.mp.dps = 80


def ml3(alpha, beta, gamma, x, terms=20000):
    # enough digits to absorb the cancellation of the largest term
    digits = 40 + int(abs(x) ** (1.0 / alpha) / 2.3) + int(3 * gamma)
    with mp.workdps(digits):
        return +_series(alpha, beta, gamma, x, terms)


def _series(alpha, beta, gamma, x, terms):
    alpha, beta, gamma, x = map(mp.mpf, (alpha, beta, gamma, x))
    s = mp.mpf(0)
    for k in range(terms):
        t = mp.rf(gamma, k) * x**k / (mp.gamma(k * alpha + beta) * mp.factorial(k))
        s += t
        if k > 50 and abs(t) < mp.mpf(10) ** (-40) * max(1, abs(s)):
            break
    return s


CASES = [
    (0.5, 1.35, 0.8, -0.6),
    (0.5, 1.0, 1.0, -3.0),
    (0.7, 1.0, 1.0, -8.0),
    (0.9, 1.7, 2.3, -12.0),
    (0.5, 2.0, 1.0, -25.0),
    (0.3, 0.8, 0.6, 4.0),
    (1.6, 1.2, 1.0, -9.0),
    (0.6, 3.5, 4.0, -1.5),
]

if __name__ == "__main__":
    for a, b, g, x in CASES:
        print(f"({a}, {b}, {g}, {x}, {mp.nstr(ml3(a, b, g, x), 20)}),")
