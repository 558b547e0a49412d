"""lambda_c from the ODE estimators next to the quadrature oracle."""
import sys

from oracle_lambda import lam

from minkhyp.symmetric_family import lambda_c

n = int(sys.argv[1]) if len(sys.argv) > 1 else 2
print(f"{'c':>7} {'lambda (ODE)':>18} {'oracle':>18} {'diff':>9}")
for c in (-10.0, -3.0, -1.0, 0.5, 0.9, 1.0):
    rep = lambda_c(c, n)
    ref = float(lam(str(c), n))
    print(f"{c:7g} {rep.lambda_c:18.12f} {ref:18.12f} {abs(rep.lambda_c - ref):9.2e}")
