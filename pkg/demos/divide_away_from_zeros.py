"""Divide phi by a row whose zero set misses the closed ball.

f = (zeta1 - 2, zeta2) only vanishes at (2, 0), so on the ball the division
f . psi = phi has a holomorphic solution for every holomorphic phi, and the
integral formulas produce it in a single eps = 0 pass. We check the residual
at each point and probe holomorphy of psi with a finite-difference dbar.
"""

import numpy as np

from resdiv import MixedPoly, QuadConfig, divide_koszul

n = 2
z1 = MixedPoly.variable(n, 1)
z2 = MixedPoly.variable(n, 2)
two = MixedPoly.const(n, 2.0)

f = [z1 - two, z2]
phi = z1 * z2 + two

base = np.array([0.15 + 0.1j, -0.2 + 0.05j])
h = 1e-4
points = [base]
for a in range(n):
    for d in (h, -h, 1j * h, -1j * h):
        p = base.copy()
        p[a] += d
        points.append(p)

rep = divide_koszul(f, phi, np.array(points), quad=QuadConfig(radial=24, angular=48))
print("mode:", rep.mode, "(no eps schedule needed)")

row = rep.rows[0]
fz = np.array([p.eval(row.z) for p in f])
print("z      =", np.round(row.z, 4))
print("psi(z) =", np.round(row.psi, 6))
print("|f.psi - phi| =", abs(fz @ row.psi - phi.eval(row.z)))

psis = rep.psi_matrix()
for a in range(n):
    plus, minus = psis[1 + 4 * a], psis[2 + 4 * a]
    iplus, iminus = psis[3 + 4 * a], psis[4 + 4 * a]
    dbar = (plus - minus) / (2 * h) + 1j * (iplus - iminus) / (2 * h)
    print("max |dbar_%d psi| ~ %.2e" % (a + 1, np.max(np.abs(dbar))))
