"""Solve one problem in both pictures and line the spectra up.

For q(x) = 0.4 sin(2 pi x) - 0.2 sin(4 pi x) with an exponentially decaying
perturbation, the impedance eigenvalues must equal the eigenvalues of the
transformed potential shifted by c0, and the norming constants must agree
outright.  The table prints both ladders for three boundary regimes.
"""

import math

import numpy as np

from liouville import (INF, ConditionU, GridFunction, Impedance,
                       equivalence_report)

n = 1024
x = np.linspace(0.0, 1.0, n + 1)
q = Impedance(GridFunction(0.4 * np.sin(2.0 * math.pi * x)
                           - 0.2 * np.sin(4.0 * math.pi * x)))
u = ConditionU.exponential(1.0, 1.0)

regimes = (("dirichlet", INF, INF),
           ("mixed b=1", INF, 1.0),
           ("generic a=1, b=-0.5", 1.0, -0.5))

for label, a, b in regimes:
    eq = equivalence_report(q, u, a, b, 8)
    print("%s  (c0 = %.6f)" % (label, eq.c0))
    print("  n   impedance lam     potential lam + c0   norming gap")
    shifted = eq.schrodinger_eigenvalues + eq.c0
    gaps = np.abs(eq.impedance_norming - eq.schrodinger_norming)
    for k in range(eq.impedance_eigenvalues.size):
        print("  %2d  %16.9f  %16.9f     %.2e"
              % (k, eq.impedance_eigenvalues[k], shifted[k], gaps[k]))
    print("  worst eigenvalue discrepancy %.2e, worst norming gap %.2e\n"
          % (eq.eigenvalue_discrepancy, eq.norming_discrepancy))
