"""Regularized residue currents and residue pairings.

For a row f = (f_1..f_m) with zero set Z, write s = sum conj(f_j) e_j and
sigma = s/|f|^2, the section of minimal norm with f.sigma = 1 off Z.  Two
epsilon-regularizations of the associated division/residue pair (U, R) are
provided, both satisfying (delta_f - dbar) U = I - R exactly at every
epsilon > 0:

  "hs" (Hormander-Skoda style denominators)
      U = sum_l s ^ (dbar s)^{l-1} / (|f|^2 + eps)^l
      R = eps/(|f|^2+eps) * sum_l (dbar s)^l / (|f|^2 + eps)^l

  "cutoff" (multiplication by chi_eps = |f|^2/(|f|^2+eps))
      U = chi_eps * sum_l sigma ^ (dbar sigma)^{l-1}
      R = (1 - chi_eps) * I + dbar chi_eps ^ u

As eps -> 0, U converges to the Koszul division current and R to the
residue current; the limit of the top R-component paired against
phi chi dzeta computes Grothendieck residues once multiplied by the
calibration constant 1/(-2 pi i)^n.

For an r x m matrix (r >= 2), sigma = f^* (f f^*)^{-1} is the minimal right
inverse, v = det(f f^*) the regularizing function, and the determinantal
complex currents are

    u_1 = sigma,
    u_k = (dbar sigma_sym)^{k-2}/(k-2)! ^ bsig ^ dbar sigma_l,
    bsig = sigma_1 ^ ... ^ sigma_r (x) det Q*,

with U_k = chi_eps u_k, R_0 = (1-chi_eps) I, R_k = dbar chi_eps ^ u_k.

Limits in eps are taken by evaluating on a decreasing geometric schedule and
applying Aitken extrapolation with a data-estimated contraction ratio; the
reported error bar combines the extrapolation correction with the last
increment.
"""

from __future__ import annotations

import numpy as np

from .conventions import residue_normalization
from .cpoly import MixedPoly
from .exterior import ExtElem, Morphism, QDET, anti, eframe, holo, qframe
from .quadrature import QuadRule, geometric_breakpoints, integrate, make_rule
from .weights import radial_cutoff

_TINY = 1e-300


class HoloMatrix:
    """An r x m matrix of holomorphic polynomials with batched evaluation."""

    def __init__(self, rows: list[list[MixedPoly]]):
        if not rows or not rows[0]:
            raise ValueError("empty matrix")
        self.rows = rows
        self.r = len(rows)
        self.m = len(rows[0])
        self.n = rows[0][0].dim
        for row in rows:
            if len(row) != self.m:
                raise ValueError("ragged matrix")
            for p in row:
                if p.dim != self.n:
                    raise ValueError("mixed dimensions")
                if not p.is_holomorphic():
                    raise ValueError("matrix entries must be holomorphic")
        self._drows = [[[p.dholo(a) for a in range(1, self.n + 1)] for p in row]
                       for row in rows]

    @classmethod
    def from_row(cls, row: list[MixedPoly]) -> "HoloMatrix":
        return cls([row])

    def eval(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        out = np.empty(zeta.shape[:-1] + (self.r, self.m), dtype=complex)
        for i, row in enumerate(self.rows):
            for j, p in enumerate(row):
                out[..., i, j] = p.eval(zeta)
        return out

    def d_eval(self, zeta) -> np.ndarray:
        """Holomorphic Jacobian values, shape (..., n, r, m)."""
        zeta = np.asarray(zeta, dtype=complex)
        out = np.empty(zeta.shape[:-1] + (self.n, self.r, self.m), dtype=complex)
        for i in range(self.r):
            for j in range(self.m):
                for a in range(self.n):
                    out[..., a, i, j] = self._drows[i][j][a].eval(zeta)
        return out

    def max_degree(self) -> int:
        return max(p.total_degree() for row in self.rows for p in row)

    def to_obj(self) -> dict:
        return {"rows": [[p.to_obj() for p in row] for row in self.rows]}

    @classmethod
    def from_obj(cls, obj: dict) -> "HoloMatrix":
        return cls([[MixedPoly.from_obj(t) for t in row] for row in obj["rows"]])


def sigma_values(F: np.ndarray, guard: float | None = None):
    """Minimal right inverse sigma = f^*(f f^*)^{-1} of values F (..., r, m).

    Returns (sigma (..., m, r), v (...,)) with v = det(f f^*).  With guard
    set, raises if any v falls below it (used to certify generic
    surjectivity at sample points); without it, near-singular points are
    clamped and rely on the regularizing chi_eps factor downstream.
    """
    F = np.asarray(F, dtype=complex)
    G = F @ np.conj(np.swapaxes(F, -1, -2))
    v = np.real(np.linalg.det(G))
    if guard is not None and np.any(v < guard):
        raise ValueError("matrix is numerically rank-deficient: det(f f*) = %g"
                         % float(np.min(v)))
    r = G.shape[-1]
    if r == 1:
        Ginv = (1.0 / np.maximum(v, _TINY))[..., None, None]
    else:
        Gc = G + np.eye(r) * _TINY
        try:
            Ginv = np.linalg.inv(Gc)
        except np.linalg.LinAlgError:
            # exactly rank-deficient at some batch point; the chi_eps factor
            # kills those contributions downstream, any bounded inverse works
            Ginv = np.linalg.pinv(Gc)
    sigma = np.conj(np.swapaxes(F, -1, -2)) @ Ginv
    return sigma, v


def minimal_inverse(f: HoloMatrix, zeta, guard: float = 1e-14) -> ExtElem:
    """The minimal-norm section with f sigma = I at the points zeta, as a
    Hom(Q, E)-valued element: sum_{j,i} sigma_{ji} e_j (x) s_i, with the
    Q*-leg in the commuting slot.  For r = 1 the Q-leg is dropped and the
    result is plain E-valued, sum conj(f_j) e_j / |f|^2."""
    zeta = np.asarray(zeta, dtype=complex)
    sigma, _ = sigma_values(f.eval(zeta), guard=guard)
    dims = (f.n, f.m, f.r)
    terms = {}
    for j in range(1, f.m + 1):
        if f.r == 1:
            terms[((eframe(j),), ())] = sigma[..., j - 1, 0]
        else:
            for i in range(1, f.r + 1):
                terms[((eframe(j),), (i,))] = sigma[..., j - 1, i - 1]
    return ExtElem(dims, terms)


# ---- Koszul (r = 1) --------------------------------------------------------


class KoszulData:
    """Per-batch geometric data of a row's currents, epsilon-independent.

    Precomputes the wedge powers entering both regularizations so that
    evaluating the family across an epsilon schedule costs only scalar
    array work.
    """

    def __init__(self, row: list[MixedPoly] | HoloMatrix, zeta, family: str = "hs",
                 trunc: int | None = None):
        hm = row if isinstance(row, HoloMatrix) else HoloMatrix.from_row(row)
        if hm.r != 1:
            raise ValueError("KoszulData is the r = 1 case")
        self.hm = hm
        n, m = hm.n, hm.m
        self.dims = (n, m, 1)
        self.family = family
        zeta = np.asarray(zeta, dtype=complex)
        self.zeta = zeta
        F = hm.eval(zeta)[..., 0, :]          # (..., m)
        dF = hm.d_eval(zeta)[..., :, 0, :]    # (..., n, m)
        self.t = np.sum(np.abs(F) ** 2, axis=-1)      # |f|^2
        self.F = F
        kmax_u = min(m, n + 1)
        kmax_r = min(m, n)
        if trunc is not None:
            kmax_u = min(kmax_u, trunc)
            kmax_r = min(kmax_r, trunc)
        self.kmax_u, self.kmax_r = kmax_u, kmax_r
        if family == "hs":
            s = ExtElem(self.dims, {((eframe(j),), ()): np.conj(F[..., j - 1])
                                    for j in range(1, m + 1)})
            ds = ExtElem.zero(self.dims)
            for a in range(1, n + 1):
                for j in range(1, m + 1):
                    ds = ds + ExtElem.monomial(self.dims, (anti(a), eframe(j)),
                                               1.0).scale(np.conj(dF[..., a - 1, j - 1]))
            self.su = {}      # s ^ (dbar s)^{l-1}
            self.dspow = {0: ExtElem.scalar(self.dims, np.ones_like(self.t) + 0j)}
            acc = s
            for l in range(1, kmax_u + 1):
                self.su[l] = acc
                acc = acc.wedge(ds)
            acc = self.dspow[0]
            for l in range(1, kmax_r + 1):
                acc = acc.wedge(ds)
                self.dspow[l] = acc
        elif family == "cutoff":
            tc = np.maximum(self.t, _TINY)
            sig = np.conj(F) / tc[..., None]
            # beta = dbar |f|^2
            beta_c = np.einsum("...j,...aj->...a", F, np.conj(dF))
            # dbar sigma_j = dbar conj(f_j)/|f|^2 - conj(f_j) beta / |f|^4
            sigma = ExtElem(self.dims, {((eframe(j),), ()): sig[..., j - 1]
                                        for j in range(1, m + 1)})
            dsigma = ExtElem.zero(self.dims)
            for a in range(1, n + 1):
                for j in range(1, m + 1):
                    c = np.conj(dF[..., a - 1, j - 1]) / tc \
                        - sig[..., j - 1] * beta_c[..., a - 1] / tc
                    dsigma = dsigma + ExtElem.monomial(self.dims, (anti(a), eframe(j)), 1.0).scale(c)
            self.beta = ExtElem(self.dims, {((anti(a),), ()): beta_c[..., a - 1]
                                            for a in range(1, n + 1)})
            self.u = {}
            acc = sigma
            for l in range(1, kmax_u + 1):
                self.u[l] = acc
                acc = acc.wedge(dsigma)
        else:
            raise ValueError("unknown regularization family %r" % family)

    def currents(self, eps: float):
        """(U, R) at one epsilon: U[k] for k = 1..kmax_u as E_k-valued
        (0, k-1)-forms, R[k] for k = 0..kmax_r as E_k-valued (0, k)-forms."""
        t = self.t
        U: dict[int, ExtElem] = {}
        R: dict[int, ExtElem] = {}
        if self.family == "hs":
            denom = t + eps
            for l in range(1, self.kmax_u + 1):
                U[l] = self.su[l].scale(1.0 / denom ** l)
            pref = eps / denom
            for l in range(0, self.kmax_r + 1):
                R[l] = self.dspow[l].scale(pref / denom ** l)
        else:
            chi = t / (t + eps)
            dchi_fac = eps / (t + eps) ** 2
            dchi = self.beta.scale(dchi_fac)
            for l in range(1, self.kmax_u + 1):
                U[l] = self.u[l].scale(chi)
            R[0] = ExtElem.scalar(self.dims, (1.0 - chi) + 0j)
            for l in range(1, self.kmax_r + 1):
                R[l] = dchi.wedge(self.u[l])
        return U, R


# ---- determinantal complex (r >= 2) ----------------------------------------


class ENData:
    """Epsilon-independent current data for an r x m matrix, r >= 2."""

    def __init__(self, hm: HoloMatrix, zeta, trunc: int | None = None):
        if hm.r < 2:
            raise ValueError("ENData is the r >= 2 case")
        self.hm = hm
        n, m, r = hm.n, hm.m, hm.r
        self.dims = (n, m, r)
        zeta = np.asarray(zeta, dtype=complex)
        F = hm.eval(zeta)              # (..., r, m)
        dF = hm.d_eval(zeta)           # (..., n, r, m)
        sigma, v = sigma_values(F)     # (..., m, r), (...)
        self.v = v
        vc = np.maximum(v, _TINY)
        G = F @ np.conj(np.swapaxes(F, -1, -2))
        Ginv = np.linalg.inv(G + np.eye(r) * _TINY)
        # dbar_a sigma = (I - sigma f) (d_a f)^* (f f^*)^{-1}
        proj = np.eye(m) - sigma @ F           # (..., m, m)
        dFstar = np.conj(np.swapaxes(dF, -1, -2))   # (..., n, m, r)
        dsig = np.einsum("...jk,...akl,...li->...aji", proj, dFstar, Ginv)
        self.dsig = dsig               # (..., n, m, r)
        # dbar v = v tr((f f^*)^{-1} f (d_a f)^*)
        tr = np.einsum("...ij,...jk,...aki->...a", Ginv, F,
                       np.conj(np.swapaxes(dF, -1, -2)))
        self.dv = v[..., None] * tr    # (..., n)
        self.sigma = sigma
        N = m - r + 1
        if trunc is not None:
            N = min(N, trunc)
        self.length = N
        # u_1 columns
        cols1 = {}
        for i in range(1, r + 1):
            val = ExtElem.zero(self.dims)
            for j in range(1, m + 1):
                val = val + ExtElem.monomial(self.dims, (eframe(j),), 1.0).scale(sigma[..., j - 1, i - 1])
            cols1[((qframe(i),), ())] = val
        self.u_cols: dict[int, dict] = {1: cols1}
        if N >= 2:
            # bsig = sigma_1 ^ ... ^ sigma_r (x) QDET
            bsig = ExtElem.scalar(self.dims, np.ones_like(v) + 0j)
            for i in range(1, r + 1):
                col = ExtElem(self.dims, {((eframe(j),), ()): sigma[..., j - 1, i - 1]
                                          for j in range(1, m + 1)})
                bsig = bsig.wedge(col)
            bsig = bsig.wedge(ExtElem.monomial(self.dims, (QDET,)))
            dscol = {}
            for i in range(1, r + 1):
                e = ExtElem.zero(self.dims)
                for a in range(1, n + 1):
                    for j in range(1, m + 1):
                        e = e + ExtElem.monomial(self.dims, (anti(a), eframe(j)),
                                                 1.0).scale(dsig[..., a - 1, j - 1, i - 1])
                dscol[i] = e
            ds_sym = ExtElem.zero(self.dims)
            for i in range(1, r + 1):
                ds_sym = ds_sym + ExtElem(self.dims, {
                    (key[0], key[1] + (i,)): c for key, c in dscol[i].terms.items()})
            fact = 1.0
            sympow = ExtElem.scalar(self.dims, np.ones_like(v) + 0j)
            for k in range(2, N + 1):
                if k > 2:
                    fact *= (k - 2)
                    sympow = sympow.wedge(ds_sym)
                cols = {}
                for i in range(1, r + 1):
                    cols[((qframe(i),), ())] = sympow.wedge(bsig).wedge(dscol[i]).scale(1.0 / fact)
                self.u_cols[k] = cols

    def currents(self, eps: float):
        """(U, R, R0) at one epsilon: U[k], R[k] as Morphisms Q -> E_k-forms;
        R0 the scalar of (1 - chi_eps) I_Q."""
        v = self.v
        chi = v / (v + eps)
        dchi_fac = eps / (v + eps) ** 2
        dchi = ExtElem(self.dims, {((anti(a),), ()): dchi_fac * self.dv[..., a - 1]
                                   for a in range(1, self.dims[0] + 1)})
        U = {}
        R = {}
        for k, cols in self.u_cols.items():
            U[k] = Morphism(self.dims, {key: val.scale(chi) for key, val in cols.items()}, (k - 1) % 2)
            if k <= min(self.hm.m - self.hm.r + 1, self.dims[0]):
                R[k] = Morphism(self.dims, {key: dchi.wedge(val) for key, val in cols.items()}, k % 2)
        r0 = 1.0 - chi
        return U, R, r0


# ---- epsilon schedules and extrapolation -----------------------------------


def eps_schedule(base: float = 0.25, count: int = 6) -> list[float]:
    """Geometric schedule base^2, base^3, ..., decreasing."""
    if not 0 < base < 1:
        raise ValueError("base must lie in (0, 1)")
    return [base ** (i + 2) for i in range(count)]


def extrapolate(values) -> tuple[complex, float]:
    """Aitken extrapolation of a sequence converging like C eps^alpha along
    a geometric schedule; alpha is estimated from successive differences.

    Returns (limit, error_estimate).  Falls back to the last value when the
    differences do not contract.
    """
    vals = [complex(v) for v in values]
    if len(vals) == 0:
        raise ValueError("no values")
    if len(vals) == 1:
        return vals[0], float("inf")
    if len(vals) == 2:
        return vals[1], abs(vals[1] - vals[0])
    d1 = vals[-2] - vals[-3]
    d2 = vals[-1] - vals[-2]
    if abs(d2) < 1e-30:
        return vals[-1], abs(d2)
    theta = d2 / d1 if abs(d1) > 1e-30 else 0.0
    if abs(theta) >= 0.95:
        return vals[-1], abs(d2) * 10.0
    corr = d2 * theta / (1.0 - theta)
    limit = vals[-1] + corr
    err = abs(corr) + abs(d2) * abs(theta) ** 2
    return limit, max(err, 1e-16)


# ---- residue pairings ------------------------------------------------------


def default_residue_rule(n: int, rho: float = 0.95, radial: int = 20,
                         angular: int = 32, npanels: int = 6, ratio: float = 3.0) -> QuadRule:
    """Ball rule with radial panels refined toward the origin, where the
    fixtures' common zeros sit; callers with zeros elsewhere should supply
    their own rule."""
    panels = geometric_breakpoints(0.0, rho, npanels, ratio)
    return make_rule("ball", n, rho=rho, radial=radial, angular=angular, panels=panels)


def residue_pairing(row: list[MixedPoly], phi: MixedPoly, test: MixedPoly,
                    rule: QuadRule, eps_list=None, family: str = "hs",
                    cutoff: tuple[float, float] = (0.7, 0.9)):
    """Pairing < R_top phi, test * chi * dzeta > of the top residue component
    of a row against a holomorphic test polynomial, extrapolated in eps.

    Returns (value, err, per_eps_values).  The pairing is raw: no residue
    normalization applied.
    """
    n = row[0].dim
    m = len(row)
    k = min(m, n)
    data = KoszulData(row, rule.nodes, family=family, trunc=None)
    pv = phi.eval(rule.nodes) * test.eval(rule.nodes)
    chi, _ = radial_cutoff(np.sqrt(np.sum(np.abs(rule.nodes) ** 2, axis=-1)), *cutoff)
    dz = ExtElem.monomial(data.dims, tuple(holo(j) for j in range(1, n + 1)))
    if eps_list is None:
        eps_list = eps_schedule()
    vals = []
    for eps in eps_list:
        _, R = data.currents(eps)
        elem = R[k].wedge(dz)
        comps = elem.volume_components()
        total = 0.0 + 0.0j
        for key, coeff in comps.items():
            total = total + integrate(rule, coeff * pv * chi)
        vals.append(total * (-2j) ** n)
    limit, err = extrapolate(vals)
    return limit, err, vals


def residue_pairing_en(hm: HoloMatrix, phi, test: MixedPoly, rule: QuadRule,
                       eps_list=None, cutoff: tuple[float, float] = (0.7, 0.9)):
    """Pairing of the top determinantal residue of an r x m matrix against
    phi (an r-tuple) and test * chi * dzeta, summed over the frame
    components of the top level.

    The top current R_k has antiholomorphic degree k, so a scalar test form
    only pairs when k = n; this needs m - r + 1 >= n.  Raw, like
    residue_pairing.
    """
    n, m, r = hm.n, hm.m, hm.r
    if m - r + 1 < n:
        raise ValueError("matrix residue pairing needs m - r + 1 >= n")
    data = ENData(hm, rule.nodes)
    pvs = [p.eval(rule.nodes) for p in phi]
    tv = test.eval(rule.nodes)
    chi, _ = radial_cutoff(np.sqrt(np.sum(np.abs(rule.nodes) ** 2, axis=-1)), *cutoff)
    dz = ExtElem.monomial(data.dims, tuple(holo(j) for j in range(1, n + 1)))
    if eps_list is None:
        eps_list = eps_schedule()
    vals = []
    for eps in eps_list:
        _, R, _ = data.currents(eps)
        total = 0.0 + 0.0j
        for i in range(1, r + 1):
            col = R[n].columns[((qframe(i),), ())]
            comps = col.wedge(dz).volume_components()
            for key, coeff in comps.items():
                total = total + integrate(rule, coeff * pvs[i - 1] * tv * chi)
        vals.append(total * (-2j) ** n)
    limit, err = extrapolate(vals)
    return limit, err, vals


def grothendieck_residue(row: list[MixedPoly], phi: MixedPoly, rule: QuadRule | None = None,
                         eps_list=None, family: str = "hs",
                         cutoff: tuple[float, float] = (0.7, 0.9)):
    """Grothendieck residue of phi with respect to a point-supported row
    (m = n), computed as the calibrated limit of the regularized pairing."""
    n = row[0].dim
    if len(row) != n:
        raise ValueError("grothendieck_residue expects m = n")
    if rule is None:
        rule = default_residue_rule(n)
    raw, err, vals = residue_pairing(row, phi, MixedPoly.const(n, 1.0), rule,
                                     eps_list=eps_list, family=family, cutoff=cutoff)
    c = residue_normalization(n)
    return raw * c, err * abs(c), [v * c for v in vals]
