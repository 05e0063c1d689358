"""Hefer decompositions and Hefer morphism families.

A Hefer decomposition of a holomorphic p writes

    p(zeta) - p(w) = sum_k 2 pi i (zeta_k - w_k) h_k(zeta, w),

i.e. delta_{zeta-w} (sum_k h_k dzeta_k) = p(zeta) - p(w) in the convention
where delta eats dzeta_k to 2 pi i (zeta_k - w_k).  hefer_decompose produces
the telescoping solution; delta_solve inverts delta_{zeta-w} on arbitrary
closed form-valued polynomials through the Koszul homotopy in v = zeta - w.

On top of these, build_koszul_family and build_en_family construct the
morphism families H^l_k : E_k -> E_l demanded by the division kernels:

    H^l_l = identity,
    delta_{zeta-w} H^l_k = H^l_{k-1} f_k(zeta) - f_{l+1}(w) H^{l+1}_k,

where E_* is the Koszul complex of a row (r = 1) or the
Eagon-Northcott-style complex of an r x m matrix (r >= 2) with

    E_0 = Q, E_1 = E, E_k = Lambda^{k+r-1} E (x) S^{k-2} Q* (x) det Q*.

For r = 1 the bundle Q is the trivial line and is represented by plain
scalars, and the family is given in closed form by divided powers of the
contraction with the Hefer matrix form.  For r >= 2 the levels l >= 2 use
the same divided powers while l = 1, 0 are produced by induction on k,
solving each equation with delta_solve.  All morphisms are verified
symbolically by HeferFamily.verify().
"""

from __future__ import annotations

import hashlib
import json
from itertools import combinations

from .conventions import TWO_PI_I
from .cpoly import MixedPoly
from .exterior import (
    QDET, ExtElem, Key, Morphism, eframe, en_basis, holo, morphism_residual,
    qframe, species, HOLO,
)


def hefer_decompose(p: MixedPoly) -> list[MixedPoly]:
    """Telescoping Hefer coefficients h_1..h_n of a zeta-polynomial.

    Each monomial zeta^a is expanded along coordinates:
    the k-th difference replaces zeta_1..zeta_{k-1} by w and factors
    (zeta_k^d - w_k^d) = (zeta_k - w_k) sum_i zeta_k^i w_k^{d-1-i}; the
    1/(2 pi i) absorbs the delta normalization.
    """
    n = p.dim
    hs = [MixedPoly.zero(n) for _ in range(n)]
    for (a, b, prm), c in p.terms.items():
        if sum(b) != 0:
            raise ValueError("hefer_decompose requires a holomorphic polynomial")
        if sum(prm) != 0:
            raise ValueError("hefer_decompose requires a parameter-free polynomial")
        for k in range(n):
            d = a[k]
            if d == 0:
                continue
            for i in range(d):
                # w^{a_1..a_{k-1}} * zeta_k^i w_k^{d-1-i} * zeta^{a_{k+1}..}
                holo_e = [0] * n
                par_e = [0] * n
                for j in range(k):
                    par_e[j] = a[j]
                holo_e[k] = i
                par_e[k] = d - 1 - i
                for j in range(k + 1, n):
                    holo_e[j] = a[j]
                key = (tuple(holo_e), (0,) * n, tuple(par_e))
                hs[k].terms[key] = hs[k].terms.get(key, 0.0) + c / TWO_PI_I
    for h in hs:
        h.terms = {k: v for k, v in h.terms.items() if v != 0}
    return hs


def hefer_form(p: MixedPoly, dims) -> ExtElem:
    """The Hefer (1,0)-form sum_k h_k dzeta_k of p as an ExtElem."""
    hs = hefer_decompose(p)
    terms = {}
    for k, h in enumerate(hs, start=1):
        if not h.is_zero():
            terms[((holo(k),), ())] = h
    return ExtElem(dims, terms)


def delta_solve(xi: ExtElem) -> ExtElem:
    """Solve delta_{zeta-w} xi' = xi for a delta-closed xi with MixedPoly
    coefficients, via the homotopy in v = zeta - w:

        xi' = sum_j dv_j ^ (d xi / d v_j) / (2 pi i (d + p))

    applied per component homogeneous of degree d in v with p holomorphic
    differentials.  Components with d + p = 0 are genuine obstructions and
    raise.  Frame generators ride along untouched.
    """
    n = xi.dims[0]
    out = ExtElem.zero(xi.dims)
    scale = xi.max_abs()
    for key, c in xi.terms.items():
        if not isinstance(c, MixedPoly):
            raise TypeError("delta_solve requires MixedPoly coefficients")
        p = sum(1 for g in key[0] if species(g) == HOLO)
        shifted = c.shift_holo(+1)
        by_deg: dict[int, MixedPoly] = {}
        for (a, b, prm), cc in shifted.terms.items():
            d = sum(a)
            by_deg.setdefault(d, MixedPoly(n))
            by_deg[d].terms[(a, b, prm)] = by_deg[d].terms.get((a, b, prm), 0.0) + cc
        for d, piece in by_deg.items():
            if piece.is_zero():
                continue
            if d + p == 0:
                # the shift cancels the v-constant part only up to rounding
                if piece.max_abs_coeff() <= 1e-9 * scale:
                    continue
                raise ValueError("delta_solve: constant scalar component obstructs")
            fac = 1.0 / (TWO_PI_I * (d + p))
            for j in range(1, n + 1):
                dc = piece.dholo(j)
                if dc.is_zero():
                    continue
                back = dc.shift_holo(-1).scale(fac)
                contrib = ExtElem.monomial(xi.dims, (holo(j),)).wedge(
                    ExtElem(xi.dims, {key: back}))
                out = out + contrib
    return out


# ---- complexes ------------------------------------------------------------


def koszul_basis(dims, k: int) -> list[Key]:
    """Monomial basis of Lambda^k E; level 0 is the scalar line."""
    m = dims[1]
    if k == 0:
        return [((), ())]
    return [(tuple(eframe(j) for j in S), ())
            for S in combinations(range(1, m + 1), k)]


def koszul_differential(row: list[MixedPoly], dims, k: int, at_param: bool = False) -> Morphism:
    """f_k : Lambda^k E -> Lambda^{k-1} E, contraction with the row; odd."""
    coeffs = [(p.to_param() if at_param else p) for p in row]
    cols = {}
    for key in koszul_basis(dims, k):
        x = ExtElem(dims, {key: MixedPoly.const(dims[0], 1.0)})
        acc = ExtElem.zero(dims)
        for j, c in enumerate(coeffs, start=1):
            acc = acc + x.contract_gen(eframe(j)).scale(c)
        cols[key] = acc
    return Morphism(dims, cols, parity=1)


def _dh_action(hforms: list[ExtElem], x: ExtElem) -> ExtElem:
    # contraction with the E*-valued Hefer form: sum_j h_j ^ iota_{e_j}; even
    acc = ExtElem.zero(x.dims)
    for j, hf in enumerate(hforms, start=1):
        acc = acc + hf.wedge(x.contract_gen(eframe(j)))
    return acc


def _dh_action_en(hrows: list[list[ExtElem]], x: ExtElem) -> ExtElem:
    # sum_{i,j} h^i_j ^ iota_{e_j} d/ds_i; even
    acc = ExtElem.zero(x.dims)
    for i, hforms in enumerate(hrows, start=1):
        xs = x.contract_sym(i)
        if xs.is_zero():
            continue
        for j, hf in enumerate(hforms, start=1):
            acc = acc + hf.wedge(xs.contract_gen(eframe(j)))
    return acc


class HeferFamily:
    """The full collection H^l_k with the differentials it interpolates."""

    def __init__(self, dims, r, length, maps, f_zeta, f_param):
        self.dims = dims
        self.r = r
        self.length = length           # largest level k
        self.maps = maps               # {(l, k): Morphism}, 0 <= l <= k <= length
        self.f_zeta = f_zeta           # {k: Morphism}, differentials in zeta
        self.f_param = f_param         # {k: Morphism}, differentials at the parameter

    def morphism(self, l: int, k: int) -> Morphism:
        return self.maps[(l, k)]

    def verify(self) -> float:
        """Max symbolic residual over every defining equation."""
        res = 0.0
        for (l, k), H in self.maps.items():
            if l == k:
                continue
            lhs = H.delta_zw_symbolic()
            rhs = self.maps[(l, k - 1)].compose(self.f_zeta[k])
            if (l + 1, k) in self.maps:
                rhs = rhs - self.f_param[l + 1].compose(self.maps[(l + 1, k)])
            res = max(res, morphism_residual(lhs, rhs))
        return res

    def to_obj(self) -> dict:
        def morph_obj(M):
            return {
                "parity": M.parity,
                "columns": [
                    {"gens": list(key[0]), "sym": list(key[1]),
                     "value": [{"gens": list(k2[0]), "sym": list(k2[1]),
                                "coeff": c.to_obj()} for k2, c in sorted(v.terms.items())]}
                    for key, v in sorted(M.columns.items())
                ],
            }
        return {
            "dims": list(self.dims),
            "r": self.r,
            "length": self.length,
            "maps": {"%d,%d" % lk: morph_obj(M) for lk, M in sorted(self.maps.items())},
        }


def build_koszul_family(row: list[MixedPoly], n: int, length: int | None = None) -> HeferFamily:
    """Hefer family for a 1 x m row via divided powers of the Hefer
    contraction."""
    m = len(row)
    dims = (n, m, 1)
    if length is None:
        length = m
    hforms = [hefer_form(p, dims) for p in row]
    maps = {}
    for k in range(0, length + 1):
        basis = koszul_basis(dims, k)
        cols = {key: ExtElem(dims, {key: MixedPoly.const(n, 1.0)}) for key in basis}
        fact = 1.0
        for l in range(k, -1, -1):
            p = k - l
            if p > 0:
                fact *= p
                cols = {key: _dh_action(hforms, v) for key, v in cols.items()}
            maps[(l, k)] = Morphism(
                dims, {key: v.scale(1.0 / fact) if p else v for key, v in cols.items()}, 0)
    f_zeta = {k: koszul_differential(row, dims, k) for k in range(1, length + 1)}
    f_param = {k: koszul_differential(row, dims, k, at_param=True) for k in range(1, length + 1)}
    return HeferFamily(dims, 1, length, maps, f_zeta, f_param)


def en_differential(rows: list[list[MixedPoly]], dims, k: int, at_param: bool = False) -> Morphism:
    """f_k of the determinantal complex of an r x m matrix.

    f_1 is the matrix itself E -> Q; f_2 contracts Lambda^{r+1} E (x) det Q*
    with every row, innermost row first; f_k for k >= 3 contracts one row
    against one symmetric slot.
    """
    n, m, r = dims
    get = (lambda p: p.to_param()) if at_param else (lambda p: p)
    cols = {}
    if k == 1:
        for j in range(1, m + 1):
            val = ExtElem.zero(dims)
            for i in range(1, r + 1):
                val = val + ExtElem.monomial(dims, (qframe(i),), 1.0).scale(get(rows[i - 1][j - 1]))
            cols[((eframe(j),), ())] = val
        return Morphism(dims, cols, parity=1)
    if k == 2:
        for key in en_basis(dims, 2):
            x = ExtElem(dims, {key: MixedPoly.const(n, 1.0)})
            x = x.contract_gen(QDET)
            for i in range(1, r + 1):
                acc = ExtElem.zero(dims)
                for j in range(1, m + 1):
                    acc = acc + x.contract_gen(eframe(j)).scale(get(rows[i - 1][j - 1]))
                x = acc
            cols[key] = x
        # all differentials act as odd operators; the solvability of the
        # induction equations for the low levels depends on it
        return Morphism(dims, cols, parity=1)
    for key in en_basis(dims, k):
        x = ExtElem(dims, {key: MixedPoly.const(n, 1.0)})
        acc = ExtElem.zero(dims)
        for i in range(1, r + 1):
            xs = x.contract_sym(i)
            if xs.is_zero():
                continue
            for j in range(1, m + 1):
                acc = acc + xs.contract_gen(eframe(j)).scale(get(rows[i - 1][j - 1]))
        cols[key] = acc
    return Morphism(dims, cols, parity=1)


def build_en_family(rows: list[list[MixedPoly]], n: int) -> HeferFamily:
    """Hefer family of an r x m matrix (r >= 2) on the determinantal
    complex of length m - r + 1."""
    r = len(rows)
    m = len(rows[0])
    if r < 2:
        raise ValueError("build_en_family needs r >= 2; use build_koszul_family")
    if any(len(row) != m for row in rows):
        raise ValueError("ragged matrix")
    dims = (n, m, r)
    length = m - r + 1
    hrows = [[hefer_form(p, dims) for p in row] for row in rows]
    bases = {0: en_basis(dims, 0), 1: en_basis(dims, 1)}
    for k in range(2, length + 1):
        bases[k] = en_basis(dims, k)
    f_zeta = {k: en_differential(rows, dims, k) for k in range(1, length + 1)}
    f_param = {k: en_differential(rows, dims, k, at_param=True) for k in range(1, length + 1)}
    maps: dict[tuple[int, int], Morphism] = {}
    for l in range(length, 1, -1):
        # divided powers of the Hefer contraction handle levels >= 2
        for k in range(l, length + 1):
            p = k - l
            cols = {}
            for key in bases[k]:
                v = ExtElem(dims, {key: MixedPoly.const(n, 1.0)})
                fact = 1.0
                for q in range(1, p + 1):
                    fact *= q
                    v = _dh_action_en(hrows, v)
                cols[key] = v.scale(1.0 / fact) if p else v
            maps[(l, k)] = Morphism(dims, cols, 0)
    one = MixedPoly.const(n, 1.0)
    for l in (1, 0):
        maps[(l, l)] = Morphism(
            dims, {key: ExtElem(dims, {key: one}) for key in bases[l]}, 0)
        for k in range(l + 1, length + 1):
            rhs_m = maps[(l, k - 1)].compose(f_zeta[k])
            if (l + 1, k) in maps:
                rhs_m = rhs_m - f_param[l + 1].compose(maps[(l + 1, k)])
            cols = {}
            for key in bases[k]:
                rhs = rhs_m.columns.get(key)
                if rhs is None or rhs.is_zero():
                    cols[key] = ExtElem.zero(dims)
                    continue
                cols[key] = delta_solve(rhs)
            maps[(l, k)] = Morphism(dims, cols, 0)
    return HeferFamily(dims, r, length, maps, f_zeta, f_param)


def build_family(matrix: list[list[MixedPoly]], n: int, length: int | None = None) -> HeferFamily:
    """Dispatch on the number of rows."""
    if len(matrix) == 1:
        return build_koszul_family(matrix[0], n, length)
    return build_en_family(matrix, n)


# ---- content-addressed cache ----------------------------------------------

_FAMILY_CACHE: dict[str, HeferFamily] = {}


def family_cache_key(matrix: list[list[MixedPoly]], n: int, length) -> str:
    payload = {
        "n": n,
        "length": length,
        "matrix": [[p.to_obj() for p in row] for row in matrix],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def get_family(matrix: list[list[MixedPoly]], n: int, length: int | None = None) -> HeferFamily:
    key = family_cache_key(matrix, n, length)
    fam = _FAMILY_CACHE.get(key)
    if fam is None:
        fam = build_family(matrix, n, length)
        _FAMILY_CACHE[key] = fam
    return fam
