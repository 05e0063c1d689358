"""Integral representation weights.

A weight with respect to the point z is a sum g = g_{0,0} + g_{1,1} + ...
of (k,k)-form components with (delta_{zeta-z} - dbar) g = 0 and
g_{0,0}(z) = 1; wedging a division kernel with a weight whose scalar part
dies at the boundary turns the boundary term of the Cauchy-Fantappie-Leray
formula into an interior integral.

The workhorse here is the radial cutoff weight

    g = chi - dbar chi ^ (s + s ^ dbar s + ... + s ^ (dbar s)^{n-1}),

where chi = rho(|zeta|) is a quintic smoothstep cutoff equal to 1 for
|zeta| <= rho0 and 0 for |zeta| >= rho1, and

    s = d|zeta|^2-part / (2 pi i (|zeta|^2 - conj(zeta).z))

satisfies delta_{zeta-z} s = 1.  The components with k >= 1 all carry the
factor dbar chi and are supported in the shell rho0 <= |zeta| <= rho1, which
the quadrature drivers exploit.

boundary_kernels gives the Cauchy-Fantappie-Leray kernels of the sphere in
the closed form they take after restriction,

    B_k = theta ^ W^{k-1} / (2 pi i D)^k,
    theta = sum conj(zeta_j) dzeta_j,  W = sum dzetabar_j ^ dzeta_j,
    D = |zeta|^2 - conj(zeta).z,

whose top term reproduces holomorphic functions from the boundary.
"""

from __future__ import annotations

import numpy as np

from .conventions import TWO_PI_I
from .exterior import ExtElem, anti, delta_zw, holo


def smoothstep(u):
    """Quintic smoothstep: 0 below 0, 1 above 1, C^2 at both ends."""
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 + u * (-15.0 + 6.0 * u))


def smoothstep_d(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    uu = np.clip(u, 0.0, 1.0)
    d = 30.0 * uu ** 2 * (1.0 - uu) ** 2
    return np.where(inside, d, 0.0)


def radial_cutoff(t, rho0: float, rho1: float):
    """chi(t) and chi'(t) for the descending cutoff: 1 on [0, rho0], 0 on
    [rho1, inf)."""
    if not 0 < rho0 < rho1:
        raise ValueError("need 0 < rho0 < rho1")
    u = (np.asarray(t, dtype=float) - rho0) / (rho1 - rho0)
    return 1.0 - smoothstep(u), -smoothstep_d(u) / (rho1 - rho0)


def cfl_section(zeta, z, dims) -> ExtElem:
    """The (1,0)-form s with delta_{zeta-z} s = 1 away from zeta = z."""
    n = dims[0]
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    D = np.sum(np.abs(zeta) ** 2, axis=-1) - np.sum(np.conj(zeta) * z, axis=-1)
    terms = {((holo(j),), ()): np.conj(zeta[..., j - 1]) / (TWO_PI_I * D)
             for j in range(1, n + 1)}
    return ExtElem(dims, terms)


def cfl_section_dbar(zeta, z, dims) -> ExtElem:
    """dbar of cfl_section, in closed form."""
    n = dims[0]
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    D = np.sum(np.abs(zeta) ** 2, axis=-1) - np.sum(np.conj(zeta) * z, axis=-1)
    out = ExtElem.zero(dims)
    inv = 1.0 / (TWO_PI_I * D)
    for j in range(1, n + 1):
        out = out + ExtElem.monomial(dims, (anti(j), holo(j))).scale(inv)
    inv2 = 1.0 / (TWO_PI_I * D * D)
    for k in range(1, n + 1):
        ck = (zeta[..., k - 1] - z[..., k - 1]) * inv2
        for j in range(1, n + 1):
            c = np.conj(zeta[..., j - 1]) * ck
            out = out + ExtElem.monomial(dims, (anti(k), holo(j))).scale(-c)
    return out


def cutoff_weight(zeta, z, dims, rho0: float, rho1: float, parts: str = "all") -> ExtElem:
    """The radial cutoff weight at the points zeta (batch) w.r.t. z.

    parts: "all" for the full weight, "scalar" for the chi component only
    (supported in |zeta| <= rho1), "shell" for the dbar chi components
    (supported in the cutoff shell).
    """
    n = dims[0]
    zeta = np.asarray(zeta, dtype=complex)
    t = np.sqrt(np.sum(np.abs(zeta) ** 2, axis=-1))
    chi, dchi = radial_cutoff(t, rho0, rho1)
    g = ExtElem.zero(dims)
    if parts in ("all", "scalar"):
        g = g + ExtElem.scalar(dims, chi + 0.0j)
    if parts == "scalar":
        return g
    # dbar chi = chi'(t) * sum_k zeta_k dzetabar_k / (2 t)
    fac = np.where(t > 0, dchi / np.maximum(2 * t, 1e-300), 0.0)
    dbar_chi = ExtElem.zero(dims)
    for k in range(1, n + 1):
        dbar_chi = dbar_chi + ExtElem.monomial(dims, (anti(k),)).scale(fac * zeta[..., k - 1])
    s = cfl_section(zeta, z, dims)
    ds = cfl_section_dbar(zeta, z, dims)
    tail = ExtElem.zero(dims)
    spow = s
    for _ in range(n):
        tail = tail + spow
        spow = spow.wedge(ds)
    return g - dbar_chi.wedge(tail)


def weight_product(a: ExtElem, b: ExtElem) -> ExtElem:
    """Weights form a multiplicative family; the product is the wedge."""
    return a.wedge(b)


def boundary_kernels(zeta, z, dims, kmax: int | None = None) -> dict[int, ExtElem]:
    """Cauchy-Fantappie-Leray sphere kernels B_1..B_kmax at boundary nodes
    zeta (on a sphere centered at 0) with pole data at z."""
    n = dims[0]
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if kmax is None:
        kmax = n
    D = np.sum(np.abs(zeta) ** 2, axis=-1) - np.sum(np.conj(zeta) * z, axis=-1)
    theta = ExtElem(dims, {((holo(j),), ()): np.conj(zeta[..., j - 1])
                           for j in range(1, n + 1)})
    W = ExtElem.zero(dims)
    for j in range(1, n + 1):
        W = W + ExtElem.monomial(dims, (anti(j), holo(j)))
    out = {}
    acc = theta
    for k in range(1, kmax + 1):
        out[k] = acc.scale(1.0 / (TWO_PI_I * D) ** k)
        if k < kmax:
            acc = acc.wedge(W)
    return out


def boundary_weight_kernels(n: int):
    """The sphere kernels as a list of fields: entry k-1 evaluates B_k at
    (zeta on the unit sphere, z interior); the eps argument is accepted for
    interface uniformity and ignored."""
    dims = (n, 1, 1)

    def mk(k):
        def field(zeta, z, eps=0.0):
            return boundary_kernels(zeta, z, dims, kmax=k)[k]
        return field

    return [mk(k) for k in range(1, n + 1)]


def weight_nabla_residual(build, zeta, z, dims, h: float = 1e-5) -> float:
    """Finite-difference check that (delta_{zeta-z} - dbar) g = 0.

    build(zeta_batch) -> ExtElem evaluates the weight at arbitrary points;
    dbar is approximated by central differences coefficientwise.
    """
    n = dims[0]
    zeta = np.asarray(zeta, dtype=complex)
    g = build(zeta)
    dg = delta_zw(g, zeta, np.asarray(z, dtype=complex))
    dbar_g = ExtElem.zero(dims)
    for k in range(1, n + 1):
        e = np.zeros(n, dtype=complex)
        e[k - 1] = h
        gp, gm = build(zeta + e), build(zeta - e)
        gip, gim = build(zeta + 1j * e), build(zeta - 1j * e)
        dk = {}
        keys = set(gp.terms) | set(gm.terms) | set(gip.terms) | set(gim.terms)
        zero = np.zeros(zeta.shape[:-1], dtype=complex)
        for key in keys:
            dx = (gp.terms.get(key, zero) - gm.terms.get(key, zero)) / (2 * h)
            dy = (gip.terms.get(key, zero) - gim.terms.get(key, zero)) / (2 * h)
            dk[key] = (dx + 1j * dy) / 2.0
        dbar_g = dbar_g + ExtElem.monomial(dims, (anti(k),)).wedge(ExtElem(dims, dk))
    return (dg - dbar_g).max_abs()
