"""Rebuild the characteristic function from its spectrum.

The characteristic function w(lambda) vanishes exactly at the eigenvalues,
so a truncated product over the ladder should approach the directly
integrated value as factors are added.  The trace identities then recover
the boundary parameters from eigenvalues and norming constants alone.
"""

import numpy as np

from liouville import (INF, GridFunction, Potential, SchrodingerProblem,
                       hadamard_wronskian, identity_ab, identity_b,
                       solve_spectrum, wronskian)


def bump(x):
    w = 2.0 * np.pi
    return 0.3 * (w * np.cos(w * x) + np.sin(w * x) ** 2 - 0.5)


prob = SchrodingerProblem(Potential.from_callable(bump, 2048))

print("product truncations vs direct integration (mixed, b = 0.2):")
data = solve_spectrum(prob, INF, 0.2, 64)
for lam in (-5.0, 3.3, 57.0):
    direct = wronskian(prob, lam, b=0.2)
    errs = [abs(hadamard_wronskian(data, lam, M) - direct)
            for M in (8, 16, 32, 64)]
    print("  lambda = %6.1f  direct = %11.4e  errors %s"
          % (lam, direct, "  ".join("%.2e" % e for e in errs)))

print("\nboundary parameter from the one-sided identity (b = 1):")
data_b = solve_spectrum(prob, INF, 1.0, 64)
sums = identity_b(prob, data_b, 64)
for M in (8, 16, 32, 64):
    print("  S_%-2d = %8.5f   |S - b| = %.3e" % (M, sums[M - 1],
                                                 abs(sums[M - 1] - 1.0)))

print("\nboth parameters from the paired identity (a = 1, b = -0.5):")
data_ab = solve_spectrum(prob, 1.0, -0.5, 64)
s_b, s_a = identity_ab(prob, data_ab, 64)
print("  recovered a = %8.5f   b = %8.5f" % (s_a[-1], s_b[-1]))
