"""Deterministic quadrature on balls, shells and spheres in C^n, n <= 3.

All rules are tensor products: Gauss-Legendre panels in the radius (and in
the latitude angles of the sphere factor) times trapezoid rules in the torus
angles.  Nodes are complex (N, n) arrays and weights are plain Lebesgue
volume weights (surface measure for sphere rules), so integrate() needs no
extra Jacobian.

Sphere factor coordinates:

    n = 1:  zeta = rho e^{i theta}
    n = 2:  zeta = rho (e^{i t1} cos a, e^{i t2} sin a),  dS = rho^3 cos a sin a da dt1 dt2
    n = 3:  zeta = rho (e^{i t1} cos a, e^{i t2} sin a cos b, e^{i t3} sin a sin b),
            dS = rho^5 cos a sin^3 a cos b sin b da db dt1 dt2 dt3

Reductions are chunked pairwise sums with a fixed chunk size, so results are
bit-reproducible for a given rule regardless of the requested thread count
(threading is a reduction grouping knob only and never changes the grouping
actually used).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CHUNK = 1 << 18


def ball_volume(n: int, rho: float = 1.0) -> float:
    return math.pi ** n * rho ** (2 * n) / math.factorial(n)


def sphere_area(n: int, rho: float = 1.0) -> float:
    return 2 * math.pi ** n * rho ** (2 * n - 1) / math.factorial(n - 1)


@dataclass
class QuadRule:
    kind: str                 # "ball" | "shell" | "sphere"
    n: int
    nodes: np.ndarray         # (N, n) complex
    weights: np.ndarray       # (N,) float
    params: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def chunks(self, chunk: int = CHUNK):
        for lo in range(0, self.size, chunk):
            yield self.nodes[lo:lo + chunk], self.weights[lo:lo + chunk]


def gauss_legendre(lo: float, hi: float, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    mid, half = (hi + lo) / 2.0, (hi - lo) / 2.0
    return mid + half * x, half * w


def panel_points(lo: float, hi: float, order: int, panels) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points over a panel decomposition of [lo, hi].

    panels: None (one panel), an int (uniform), or a breakpoint list
    starting at lo and ending at hi.
    """
    if panels is None:
        bks = [lo, hi]
    elif isinstance(panels, int):
        bks = list(np.linspace(lo, hi, panels + 1))
    else:
        bks = list(panels)
        if abs(bks[0] - lo) > 1e-12 or abs(bks[-1] - hi) > 1e-12:
            raise ValueError("panel breakpoints must span [%g, %g]" % (lo, hi))
    xs, ws = [], []
    for a, b in zip(bks[:-1], bks[1:]):
        x, w = gauss_legendre(a, b, order)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def geometric_breakpoints(lo: float, hi: float, npanels: int, ratio: float = 2.5) -> list[float]:
    """Breakpoints on [lo, hi] whose panel widths grow geometrically away
    from lo; used to resolve integrands that peak near the inner radius."""
    if npanels < 1:
        raise ValueError("need at least one panel")
    widths = np.array([ratio ** k for k in range(npanels)], dtype=float)
    widths *= (hi - lo) / widths.sum()
    out = [lo]
    for w in widths:
        out.append(out[-1] + w)
    out[-1] = hi
    return out


def _unit_sphere(n: int, angular: int, lat: int):
    """Unit-sphere nodes (N, n) complex and surface weights (N,)."""
    th = 2 * np.pi * np.arange(angular) / angular
    wth = np.full(angular, 2 * np.pi / angular)
    if n == 1:
        return np.exp(1j * th)[:, None], wth.copy()
    if n == 2:
        a, wa = gauss_legendre(0.0, np.pi / 2, lat)
        ca, sa = np.cos(a), np.sin(a)
        # order: (a, t1, t2) flattened C-style
        z1 = (np.exp(1j * th)[None, :, None] * ca[:, None, None])
        z2 = (np.exp(1j * th)[None, None, :] * sa[:, None, None])
        w = (wa * ca * sa)[:, None, None] * wth[None, :, None] * wth[None, None, :]
        nodes = np.stack([np.broadcast_to(z1, w.shape).ravel(),
                          np.broadcast_to(z2, w.shape).ravel()], axis=-1)
        return nodes, w.ravel()
    if n == 3:
        a, wa = gauss_legendre(0.0, np.pi / 2, lat)
        b, wb = gauss_legendre(0.0, np.pi / 2, lat)
        ca, sa = np.cos(a), np.sin(a)
        cb, sb = np.cos(b), np.sin(b)
        e = np.exp(1j * th)
        shape = (lat, lat, angular, angular, angular)
        z1 = ca[:, None, None, None, None] * e[None, None, :, None, None]
        z2 = (sa[:, None] * cb[None, :])[:, :, None, None, None] * e[None, None, None, :, None]
        z3 = (sa[:, None] * sb[None, :])[:, :, None, None, None] * e[None, None, None, None, :]
        w = ((wa * ca * sa ** 3)[:, None] * (wb * cb * sb)[None, :])[:, :, None, None, None] \
            * wth[None, None, :, None, None] * wth[None, None, None, :, None] * wth[None, None, None, None, :]
        nodes = np.stack([np.broadcast_to(z1, shape).ravel(),
                          np.broadcast_to(z2, shape).ravel(),
                          np.broadcast_to(z3, shape).ravel()], axis=-1)
        return nodes, w.ravel()
    raise ValueError("sphere rules cover n in {1, 2, 3}, got n=%d" % n)


def make_rule(kind: str, n: int, rho: float = 1.0, radial: int = 16,
              angular: int = 32, r0: float | None = None, r1: float | None = None,
              panels=None) -> QuadRule:
    """Build a quadrature rule.

    kind "ball": solid ball |zeta| <= rho.
    kind "shell": r0 <= |zeta| <= r1 (both required).
    kind "sphere": surface |zeta| = rho.

    radial is the Gauss-Legendre order per panel, reused for sphere
    latitudes; angular is the trapezoid count per torus circle.
    """
    if n < 1 or n > 3:
        raise ValueError("supported dimensions are 1..3, got n=%d" % n)
    params = {"kind": kind, "n": n, "rho": rho, "radial": radial,
              "angular": angular, "r0": r0, "r1": r1,
              "panels": panels if not isinstance(panels, (list, np.ndarray)) else [float(x) for x in panels]}
    if kind == "sphere":
        onodes, oweights = _unit_sphere(n, angular, radial)
        return QuadRule(kind, n, rho * onodes, (rho ** (2 * n - 1)) * oweights, params)
    if kind == "ball":
        lo, hi = 0.0, rho
    elif kind == "shell":
        if r0 is None or r1 is None or not (0 <= r0 < r1):
            raise ValueError("shell needs radii 0 <= r0 < r1")
        lo, hi = float(r0), float(r1)
    else:
        raise ValueError("unknown rule kind %r" % kind)
    t, wt = panel_points(lo, hi, radial, panels)
    onodes, oweights = _unit_sphere(n, angular, radial)
    nodes = (t[:, None, None] * onodes[None, :, :]).reshape(-1, n)
    weights = (wt * t ** (2 * n - 1))[:, None] * oweights[None, :]
    return QuadRule(kind, n, nodes, weights.ravel(), params)


def chunked_sum(values: np.ndarray, weights: np.ndarray | None = None,
                chunk: int = CHUNK):
    """Deterministic weighted reduction: fixed-size chunks are summed with
    numpy's pairwise accumulator and the per-chunk partials are added in
    order.  The grouping never depends on threading, so repeated runs agree
    bitwise."""
    v = np.asarray(values)
    total = None
    for lo in range(0, v.shape[0], chunk):
        piece = v[lo:lo + chunk]
        if weights is not None:
            w = weights[lo:lo + chunk].reshape((-1,) + (1,) * (piece.ndim - 1))
            piece = piece * w
        part = np.sum(piece, axis=0)
        total = part if total is None else total + part
    if total is None:
        return 0.0 + 0.0j
    return total


def integrate(rule: QuadRule, f, chunk: int = CHUNK):
    """Integrate f over the rule.  f is either a callable evaluated on
    (nodes_chunk) -> values, or a precomputed (N, ...) value array."""
    if callable(f):
        total = None
        for lo in range(0, rule.size, chunk):
            vals = np.asarray(f(rule.nodes[lo:lo + chunk]))
            part = np.sum(vals * rule.weights[lo:lo + chunk].reshape(
                (-1,) + (1,) * (vals.ndim - 1)), axis=0)
            total = part if total is None else total + part
        return 0.0 + 0.0j if total is None else total
    f = np.asarray(f)
    w = rule.weights.reshape((-1,) + (1,) * (f.ndim - 1))
    return chunked_sum(f * w, None, chunk)


def integrate_field(field, z, eps, rule: QuadRule, chunk: int = CHUNK):
    """Integrate a scalar-valued form field over the rule.

    field(zeta_batch, z, eps) returns an ExtElem; solid rules pair its
    interleaved top coefficient with the (-2i)^n Lebesgue conversion, sphere
    rules use the tangential boundary density.  Frame-carrying components
    are ignored; bundle-valued integrands go through the division drivers,
    which extract the frame components themselves.
    """
    n = rule.n
    total = 0.0 + 0.0j
    for lo in range(0, rule.size, chunk):
        nodes = rule.nodes[lo:lo + chunk]
        elem = field(nodes, z, eps)
        if rule.kind == "sphere":
            dens = elem.boundary_density(nodes).get(((), ()), None)
            if dens is None:
                continue
        else:
            dens = elem.top_volume_coeff()
            if isinstance(dens, float) and dens == 0.0:
                continue
            dens = dens * (-2j) ** n
        total = total + np.sum(np.broadcast_to(dens, (len(nodes),))
                               * rule.weights[lo:lo + chunk])
    return total
