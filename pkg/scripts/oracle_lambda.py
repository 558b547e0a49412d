"""Independent high-precision values of lambda_c by quadrature.

From the first integral, for t > 0 the profile satisfies
f' = sqrt(1 - (c + f^n)^{-2/n}), so t(F) = int_a^F ds / f'(s) with a = f(0),
and lambda_c = lim (t(F) - F) = int_a^inf (1/f'(s) - 1) ds - a.
"""
import sys

import mpmath as mp

mp.mp.dps = 30


def lam(c, n=2):
    c = mp.mpf(c)
    a = mp.mpf(1) if c == 1 else (1 - c) ** (mp.mpf(1) / n)
    g = lambda s: 1 / mp.sqrt(1 - (c + s**n) ** (-mp.mpf(2) / n)) - 1
    return mp.quad(g, [a, a + 1, 10 * (a + 1), mp.inf]) - a


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    for c in ["-100", "-10", "-3", "-1", "0.5", "0.9", "0.99", "0.999", "1"]:
        print(c, mp.nstr(lam(c, n), 15))
