"""Exterior algebra with form, frame and coframe generators.

The algebra underlying all kernels is generated, over C^n with an auxiliary
rank-m bundle E and rank-r bundle Q, by

    dzeta_1..dzeta_n, dzetabar_1..dzetabar_n,   (form part)
    e_1..e_m, e*_1..e*_m,                       (frame / coframe of E)
    eps_1..eps_r, det(Q*),                      (frame of Q, determinant symbol)

all of which anticommute pairwise, plus commuting symbols s_1..s_r for
symmetric powers of Q* (these commute with everything).  Elements are stored
sparsely: a term key is (anticommuting generators as a sorted tuple of codes,
symmetric multiset as a sorted tuple of indices) and the coefficient is any
object supporting +, -, * (complex scalars, numpy arrays over a quadrature
batch, or MixedPoly for symbolic work).

The global generator order is the species order listed above with indices
ascending inside a species; sorting into that order defines the sign of every
product.  Keys are always stored canonically sorted, so the form part of a
monomial is a prefix of the key and the frame part a suffix, which lets the
integration and morphism code split coefficients without extra signs.
"""

from __future__ import annotations

import numpy as np

from .conventions import TWO_PI_I, interleave_sign
from .cpoly import MixedPoly

# species bases; integer order realizes the global generator order
HOLO = 0x000
ANTI = 0x100
EFRAME = 0x200
ECOFRAME = 0x300
QFRAME = 0x400
QDET_CODE = 0x500


def holo(j: int) -> int:
    return HOLO + (j - 1)


def anti(j: int) -> int:
    return ANTI + (j - 1)


def eframe(j: int) -> int:
    return EFRAME + (j - 1)


def ecoframe(j: int) -> int:
    return ECOFRAME + (j - 1)


def qframe(i: int) -> int:
    return QFRAME + (i - 1)


QDET = QDET_CODE


def species(code: int) -> int:
    return code & ~0xFF


def index(code: int) -> int:
    return (code & 0xFF) + 1


def gen_name(code: int) -> str:
    sp, j = species(code), index(code)
    return {
        HOLO: "dz%d", ANTI: "d~z%d", EFRAME: "e%d",
        ECOFRAME: "e*%d", QFRAME: "eps%d",
    }.get(sp, "detQ*%.0s") % j


def _merge_sign(a: tuple[int, ...], b: tuple[int, ...]):
    """Merge two sorted generator tuples; return (merged, sign) or
    (None, 0) when a generator repeats."""
    out = []
    sign = 1
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        if a[i] == b[j]:
            return None, 0
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            # b[j] jumps over the remaining elements of a
            if (la - i) & 1:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


def _coeff_is_exact_zero(c) -> bool:
    if isinstance(c, MixedPoly):
        return c.is_zero()
    if isinstance(c, (int, float, complex)):
        return c == 0
    return False  # arrays are kept


Key = tuple[tuple[int, ...], tuple[int, ...]]

_SCALAR_KEY: Key = ((), ())


class ExtElem:
    """Sparse element of the exterior algebra described above.

    ``dims = (n, m, r)`` bounds the generator indices.  Coefficients may be
    numbers, numpy arrays (a batch of values over quadrature nodes) or
    MixedPoly (a symbolic element); a single element should not mix
    symbolic and batch coefficients.
    """

    __slots__ = ("dims", "terms")

    def __init__(self, dims: tuple[int, int, int], terms: dict[Key, object] | None = None):
        self.dims = dims
        self.terms: dict[Key, object] = terms if terms is not None else {}

    # ---- constructors ----

    @classmethod
    def zero(cls, dims) -> "ExtElem":
        return cls(dims)

    @classmethod
    def scalar(cls, dims, c) -> "ExtElem":
        if _coeff_is_exact_zero(c):
            return cls(dims)
        return cls(dims, {_SCALAR_KEY: c})

    @classmethod
    def monomial(cls, dims, gens, c=1.0, sym=()) -> "ExtElem":
        """Monomial with the given anticommuting generators (any order;
        the sign of sorting them is applied) and symmetric multiset."""
        gens = tuple(gens)
        key = tuple(sorted(gens))
        if len(set(key)) != len(key):
            return cls(dims)
        sign = _perm_sign(gens, key)
        coeff = c * sign if sign != 1 else c
        return cls(dims, {(key, tuple(sorted(sym))): coeff})

    def copy(self) -> "ExtElem":
        return ExtElem(self.dims, dict(self.terms))

    # ---- basic queries ----

    def is_zero(self) -> bool:
        return all(_coeff_is_exact_zero(c) for c in self.terms.values())

    def parity(self) -> int:
        """0 for even, 1 for odd; raises on mixed parity."""
        ps = {len(k[0]) & 1 for k in self.terms}
        if not ps:
            return 0
        if len(ps) > 1:
            raise ValueError("element has mixed parity")
        return ps.pop()

    def max_abs(self) -> float:
        m = 0.0
        for c in self.terms.values():
            if isinstance(c, MixedPoly):
                m = max(m, c.max_abs_coeff())
            else:
                m = max(m, float(np.max(np.abs(c))))
        return m

    # ---- linear structure ----

    def __add__(self, other: "ExtElem") -> "ExtElem":
        if self.dims != other.dims:
            raise ValueError("rank mismatch: %r vs %r" % (self.dims, other.dims))
        out = dict(self.terms)
        for k, c in other.terms.items():
            if k in out:
                s = out[k] + c
                if _coeff_is_exact_zero(s):
                    del out[k]
                else:
                    out[k] = s
            else:
                out[k] = c
        return ExtElem(self.dims, out)

    def __neg__(self) -> "ExtElem":
        return ExtElem(self.dims, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "ExtElem") -> "ExtElem":
        return self + (-other)

    def scale(self, c) -> "ExtElem":
        if _coeff_is_exact_zero(c):
            return ExtElem(self.dims)
        return ExtElem(self.dims, {k: v * c for k, v in self.terms.items()})

    # ---- products ----

    def wedge(self, other: "ExtElem") -> "ExtElem":
        if self.dims != other.dims:
            raise ValueError("rank mismatch: %r vs %r" % (self.dims, other.dims))
        out: dict[Key, object] = {}
        for (g1, s1), c1 in self.terms.items():
            for (g2, s2), c2 in other.terms.items():
                merged, sign = _merge_sign(g1, g2)
                if merged is None:
                    continue
                key = (merged, tuple(sorted(s1 + s2)))
                c = c1 * c2
                if sign < 0:
                    c = -c
                if key in out:
                    s = out[key] + c
                    if _coeff_is_exact_zero(s):
                        del out[key]
                    else:
                        out[key] = s
                else:
                    out[key] = c
        return ExtElem(self.dims, out)

    def wedge_power(self, p: int) -> "ExtElem":
        if p < 0:
            raise ValueError("negative power")
        acc = ExtElem.scalar(self.dims, 1.0)
        for _ in range(p):
            acc = acc.wedge(self)
        return acc

    # ---- contractions ----

    def contract_gen(self, code: int) -> "ExtElem":
        """Interior multiplication with the dual of a single anticommuting
        generator: an odd antiderivation killing everything without it."""
        out: dict[Key, object] = {}
        for (g, s), c in self.terms.items():
            try:
                pos = g.index(code)
            except ValueError:
                continue
            key = (g[:pos] + g[pos + 1:], s)
            cc = -c if pos & 1 else c
            if key in out:
                acc = out[key] + cc
                if _coeff_is_exact_zero(acc):
                    del out[key]
                else:
                    out[key] = acc
            else:
                out[key] = cc
        return ExtElem(self.dims, out)

    def contract_sym(self, i: int) -> "ExtElem":
        """Derivation-style contraction of one symmetric Q* factor with
        eps_i: each term is multiplied by the multiplicity of i and loses
        one copy."""
        out: dict[Key, object] = {}
        for (g, s), c in self.terms.items():
            mult = s.count(i)
            if mult == 0:
                continue
            pos = s.index(i)
            key = (g, s[:pos] + s[pos + 1:])
            cc = c * mult
            if key in out:
                out[key] = out[key] + cc
            else:
                out[key] = cc
        return ExtElem(self.dims, out)

    def bidegree_part(self, p: int, q: int, frame_deg: int | None = None) -> "ExtElem":
        """Terms with exactly p holomorphic and q antiholomorphic
        differentials (and, if given, frame_deg E-frame generators)."""
        out = {}
        for (g, s), c in self.terms.items():
            np_ = sum(1 for x in g if species(x) == HOLO)
            nq = sum(1 for x in g if species(x) == ANTI)
            if np_ != p or nq != q:
                continue
            if frame_deg is not None:
                ne = sum(1 for x in g if species(x) == EFRAME)
                if ne != frame_deg:
                    continue
            out[(g, s)] = c
        return ExtElem(self.dims, out)

    # ---- volume extraction ----

    def top_volume_coeff(self):
        """Coefficient of the interleaved volume monomial
        dz_1^dzbar_1^...^dz_n^dzbar_n.  Terms carrying frame generators are
        ignored; use volume_components for bundle-valued integrands."""
        n = self.dims[0]
        key = (tuple(holo(j) for j in range(1, n + 1)) + tuple(anti(j) for j in range(1, n + 1)), ())
        c = self.terms.get(key)
        if c is None:
            return 0.0
        s = interleave_sign(n)
        return c if s == 1 else -c

    def volume_components(self) -> dict[Key, object]:
        """Split off the full volume form: returns {frame-part key:
        coefficient relative to the interleaved volume monomial}.  Because
        differentials precede frames in the canonical order this carries no
        extra sign."""
        n = self.dims[0]
        top = tuple(holo(j) for j in range(1, n + 1)) + tuple(anti(j) for j in range(1, n + 1))
        s = interleave_sign(n)
        out = {}
        for (g, sym), c in self.terms.items():
            if g[: 2 * n] != top:
                continue
            rest = (g[2 * n:], sym)
            out[rest] = c if s == 1 else -c
        return out

    def boundary_density(self, zeta) -> dict[Key, object]:
        """Tangential density of a (2n-1)-form on the sphere |zeta| = rho,
        relative to surface measure, per frame monomial.

        Each such term is the interior product of the full volume with a
        coordinate field, and the divergence theorem converts that flux
        pairing with the outward normal zeta/rho into

            density = s_n (-2i)^n / (2 rho) * sum_k (
                (-1)^(k-1) a_k conj(zeta_k) + (-1)^(n+k-1) b_k zeta_k )

        where a_k, b_k are the coefficients of the sorted monomials missing
        dz_k resp. dzbar_k and s_n is the interleaving sign.
        """
        n = self.dims[0]
        zeta = np.asarray(zeta, dtype=complex)
        rho2 = np.sum(np.abs(zeta) ** 2, axis=-1)
        full_h = tuple(holo(j) for j in range(1, n + 1))
        full_a = tuple(anti(j) for j in range(1, n + 1))
        fac = interleave_sign(n) * (-2j) ** n / 2.0
        out: dict[Key, object] = {}
        for (g, sym), c in self.terms.items():
            diffs = tuple(x for x in g if species(x) in (HOLO, ANTI))
            frames = g[len(diffs):]
            if len(diffs) != 2 * n - 1:
                continue
            h_part = tuple(x for x in diffs if species(x) == HOLO)
            a_part = tuple(x for x in diffs if species(x) == ANTI)
            if len(h_part) == n - 1 and a_part == full_a:
                k = _missing_index(full_h, h_part)
                sign = -1 if (k - 1) % 2 else 1  # dz_k jumps over k-1 gens
                contrib = fac * sign * c * np.conj(zeta[..., k - 1])
            elif h_part == full_h and len(a_part) == n - 1:
                k = _missing_index(full_a, a_part)
                sign = -1 if (n + k - 1) % 2 else 1
                contrib = fac * sign * c * zeta[..., k - 1]
            else:
                continue
            rest = (frames, sym)
            if rest in out:
                out[rest] = out[rest] + contrib
            else:
                out[rest] = contrib
        # normal is zeta/rho, and the formula above used zeta itself
        for k in list(out):
            out[k] = out[k] / np.sqrt(rho2)
        return out

    # ---- display ----

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        lines = []
        for (g, s), c in sorted(self.terms.items()):
            gens = "^".join(gen_name(x) for x in g) or "1"
            if s:
                gens += " . " + "*".join("s%d" % i for i in s)
            if isinstance(c, np.ndarray):
                cs = "<array %s>" % (c.shape,)
            else:
                cs = repr(c)
            lines.append("%s  %s" % (cs, gens))
        return "\n".join(lines)


def _perm_sign(seq: tuple[int, ...], target: tuple[int, ...]) -> int:
    # sign of the permutation sorting seq into target (assumed sorted)
    seq = list(seq)
    sign = 1
    for i, want in enumerate(target):
        j = seq.index(want, i)
        if j != i:
            seq[i], seq[j] = seq[j], seq[i]
            sign = -sign
    return sign


def _missing_index(full: tuple[int, ...], part: tuple[int, ...]) -> int:
    for pos, x in enumerate(full):
        if pos >= len(part) or part[pos] != x:
            return index(x)
    raise AssertionError("no generator missing")


# ---- flat API -------------------------------------------------------------


def wedge(a: ExtElem, b: ExtElem) -> ExtElem:
    return a.wedge(b)


def contract(covector: list[tuple[int, object]], x: ExtElem) -> ExtElem:
    """Interior multiplication with sum_k c_k * (dual of generator g_k),
    covector = [(g_k, c_k), ...]."""
    acc = ExtElem.zero(x.dims)
    for code, c in covector:
        if _coeff_is_exact_zero(c):
            continue
        acc = acc + x.contract_gen(code).scale(c)
    return acc


def bidegree_part(x: ExtElem, p: int, q: int, frame_deg: int | None = None) -> ExtElem:
    return x.bidegree_part(p, q, frame_deg)


def top_volume_coeff(x: ExtElem):
    return x.top_volume_coeff()


def delta_zw(x: ExtElem, zeta, w) -> ExtElem:
    """Interior multiplication with the difference vector field: numeric
    version, dzeta_j -> 2*pi*i*(zeta_j - w_j)."""
    n = x.dims[0]
    zeta = np.asarray(zeta, dtype=complex)
    w = np.asarray(w, dtype=complex)
    cov = [(holo(j), TWO_PI_I * (zeta[..., j - 1] - w[..., j - 1])) for j in range(1, n + 1)]
    return contract(cov, x)


def delta_zw_symbolic(x: ExtElem) -> ExtElem:
    """Symbolic version of delta_zw for MixedPoly coefficients."""
    n = x.dims[0]
    cov = []
    for j in range(1, n + 1):
        c = (MixedPoly.variable(n, j) - MixedPoly.param_variable(n, j)).scale(TWO_PI_I)
        cov.append((holo(j), c))
    return contract(cov, x)


def dbar_symbolic(x: ExtElem) -> ExtElem:
    """d-bar on an element with MixedPoly coefficients: wedges dzetabar_j
    against the coefficient derivatives."""
    n = x.dims[0]
    acc = ExtElem.zero(x.dims)
    for j in range(1, n + 1):
        d = ExtElem.zero(x.dims)
        for key, c in x.terms.items():
            if not isinstance(c, MixedPoly):
                raise TypeError("dbar_symbolic requires MixedPoly coefficients")
            dc = c._d_anti(j - 1)
            if not dc.is_zero():
                d.terms[key] = dc
        acc = acc + ExtElem.monomial(x.dims, (anti(j),)).wedge(d)
    return acc


# ---- morphisms between graded pieces --------------------------------------


class Morphism:
    """Bundle map represented by its columns over an explicit monomial basis
    of the source.

    ``columns[key] = value`` sends the source basis monomial (frame part of
    a term key) to an ExtElem in the target bundle, possibly with form
    coefficients.  ``parity`` is the total parity of the map: applying an
    odd map to omega ^ b costs (-1)^deg(omega).
    """

    __slots__ = ("dims", "columns", "parity")

    def __init__(self, dims, columns: dict[Key, ExtElem], parity: int):
        self.dims = dims
        self.columns = columns
        self.parity = parity & 1

    @classmethod
    def identity(cls, dims, basis: list[Key]) -> "Morphism":
        cols = {k: ExtElem(dims, {k: 1.0}) for k in basis}
        return cls(dims, cols, 0)

    @classmethod
    def zero_map(cls, dims) -> "Morphism":
        return cls(dims, {}, 0)

    def apply(self, x: ExtElem, strict: bool = True) -> ExtElem:
        """Apply to an element whose frame parts lie in the source basis.

        The canonical key order puts differentials before frames, so each
        term splits as (form monomial) ^ (source basis monomial) without a
        sign; the map's parity then acts on the form degree.
        """
        acc = ExtElem.zero(self.dims)
        for (g, s), c in x.terms.items():
            nd = 0
            for code in g:
                if species(code) in (HOLO, ANTI):
                    nd += 1
                else:
                    break
            diffs, frames = g[:nd], g[nd:]
            col = self.columns.get((frames, s))
            if col is None:
                if strict:
                    raise KeyError("no column for source monomial %r" % ((frames, s),))
                continue
            cc = -c if (self.parity and nd & 1) else c
            acc = acc + ExtElem(self.dims, {(diffs, ()): cc}).wedge(col)
        return acc

    def compose(self, inner: "Morphism") -> "Morphism":
        cols = {k: self.apply(v, strict=False) for k, v in inner.columns.items()}
        return Morphism(self.dims, cols, self.parity ^ inner.parity)

    def __add__(self, other: "Morphism") -> "Morphism":
        if self.parity != other.parity:
            raise ValueError("parity mismatch in morphism sum")
        cols = dict(self.columns)
        for k, v in other.columns.items():
            cols[k] = cols[k] + v if k in cols else v
        return Morphism(self.dims, cols, self.parity)

    def __sub__(self, other: "Morphism") -> "Morphism":
        return self + other.scale(-1.0)

    def scale(self, c) -> "Morphism":
        return Morphism(self.dims, {k: v.scale(c) for k, v in self.columns.items()}, self.parity)

    def delta_zw_symbolic(self) -> "Morphism":
        return Morphism(
            self.dims,
            {k: delta_zw_symbolic(v) for k, v in self.columns.items()},
            self.parity ^ 1,
        )

    def eval_at(self, zeta, w) -> "Morphism":
        """Evaluate MixedPoly coefficients at (zeta batch, parameter w)."""
        cols = {}
        for k, v in self.columns.items():
            terms = {}
            for key, c in v.terms.items():
                terms[key] = c.eval(zeta, w) if isinstance(c, MixedPoly) else c
            cols[k] = ExtElem(self.dims, terms)
        return Morphism(self.dims, cols, self.parity)

    def max_abs(self) -> float:
        return max((v.max_abs() for v in self.columns.values()), default=0.0)


def en_basis(dims: tuple[int, int, int], k: int) -> list[Key]:
    """Monomial basis of the k-th term of the determinantal complex for an
    r x m matrix: E_0 = Q, E_1 = E, and for k >= 2

        E_k = Lambda^{k+r-1} E  (x)  S^{k-2} Q*  (x)  det Q*,

    realized as e-subsets wedged with the det symbol times a symmetric
    multiset in s_1..s_r."""
    n, m, r = dims
    if k == 0:
        return [((qframe(i),), ()) for i in range(1, r + 1)]
    if k == 1:
        return [((eframe(j),), ()) for j in range(1, m + 1)]
    size = k + r - 1
    if size > m:
        return []
    from itertools import combinations, combinations_with_replacement

    out: list[Key] = []
    for combo in combinations(range(1, m + 1), size):
        gens = tuple(eframe(j) for j in combo) + (QDET,)
        for sym in combinations_with_replacement(range(1, r + 1), k - 2):
            out.append((gens, tuple(sym)))
    return out


def morphism_residual(a: Morphism, b: Morphism) -> float:
    """Max coefficient deviation between two morphisms (symbolic)."""
    keys = set(a.columns) | set(b.columns)
    res = 0.0
    for k in keys:
        va = a.columns.get(k)
        vb = b.columns.get(k)
        if va is None:
            d = vb
        elif vb is None:
            d = va
        else:
            d = va - vb
        res = max(res, d.max_abs())
    return res
