"""Walk one impedance profile through the change of picture.

Builds q(x) = sin(2 pi x), forms the Schrodinger potential p = q' + q^2 - c0,
checks the closed form, and prints the estimate suite that pins the norm
relations between the two coefficient spaces.
"""

import math

import numpy as np

from liouville import (ConditionU, GridFunction, Impedance, build_rho,
                       compute_c0, estimate_suite, forward_transform, l2_norm)

n = 2048
x = np.linspace(0.0, 1.0, n + 1)
q = Impedance(GridFunction(np.sin(2.0 * math.pi * x)))
u = ConditionU.zero()

rho = build_rho(q)
c0 = compute_c0(q, u)
p = forward_transform(q, u)
closed = 2.0 * math.pi * np.cos(2.0 * math.pi * x) \
    + np.sin(2.0 * math.pi * x) ** 2 - 0.5

print("q(x) = sin(2 pi x) on a %d-cell grid" % n)
print("  weight endpoint rho(1)   %.12f" % rho.rho1)
print("  mean shift c0            %.12f  (exact 1/2)" % c0)
print("  |p - closed form|_sup    %.3e" % np.max(np.abs(p.f.values - closed)))
print("  |p|^2                    %.12f  (exact 2 pi^2 + 1/8 = %.12f)"
      % (l2_norm(p.f) ** 2, 2.0 * math.pi ** 2 + 0.125))

print("\nestimate suite (lhs <relation> rhs, margin = rhs - lhs):")
report = estimate_suite(q, u)
for row in report.rows:
    state = "ok " if row.satisfied else "BAD"
    print("  %s %-14s %s  lhs=%11.4e rhs=%11.4e margin=%10.3e"
          % (state, row.name, row.relation, row.lhs, row.rhs, row.margin))
print("all rows satisfied:", report.passed)
