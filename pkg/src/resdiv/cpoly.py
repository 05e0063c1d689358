"""Sparse polynomials in z, zbar and a holomorphic parameter.

A MixedPoly over C^n is a finite sum of terms

    c * zeta^a * conj(zeta)^b * w^p

where a, b, p are multi-indices of length n, zeta is the integration
variable, and w is a second holomorphic point (the evaluation point of the
kernels, kept separate so that Hefer decompositions can be represented
exactly).  Coefficients are complex doubles.  Terms are stored sparsely in
a dict keyed by the exponent triple; the canonical term order is
lexicographic in (a, b, p).
"""

from __future__ import annotations

import numpy as np

Exponents = tuple[int, ...]
TermKey = tuple[Exponents, Exponents, Exponents]


def _zeros(n: int) -> Exponents:
    return (0,) * n


class MixedPoly:
    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict[TermKey, complex] | None = None):
        self.dim = int(dim)
        self.terms: dict[TermKey, complex] = {}
        if terms:
            for key, c in terms.items():
                if c != 0:
                    self.terms[key] = self.terms.get(key, 0.0) + complex(c)

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "MixedPoly":
        return cls(dim)

    @classmethod
    def const(cls, dim: int, c: complex) -> "MixedPoly":
        if c == 0:
            return cls(dim)
        return cls(dim, {(_zeros(dim),) * 3: complex(c)})

    @classmethod
    def variable(cls, dim: int, j: int) -> "MixedPoly":
        """zeta_j, with j in 1..dim."""
        e = tuple(1 if i == j - 1 else 0 for i in range(dim))
        return cls(dim, {(e, _zeros(dim), _zeros(dim)): 1.0})

    @classmethod
    def anti_variable(cls, dim: int, j: int) -> "MixedPoly":
        """conj(zeta_j)."""
        e = tuple(1 if i == j - 1 else 0 for i in range(dim))
        return cls(dim, {(_zeros(dim), e, _zeros(dim)): 1.0})

    @classmethod
    def param_variable(cls, dim: int, j: int) -> "MixedPoly":
        """w_j, the holomorphic parameter."""
        e = tuple(1 if i == j - 1 else 0 for i in range(dim))
        return cls(dim, {(_zeros(dim), _zeros(dim), e): 1.0})

    # ---- predicates ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_holomorphic(self) -> bool:
        """No conj(zeta) exponents (may still depend on the parameter)."""
        return all(sum(b) == 0 for (_, b, _) in self.terms)

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(a) + sum(b) + sum(p) for (a, b, p) in self.terms)

    def max_abs_coeff(self) -> float:
        if not self.terms:
            return 0.0
        return max(abs(c) for c in self.terms.values())

    # ---- ring operations ----------------------------------------------

    def __add__(self, other: "MixedPoly") -> "MixedPoly":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch: %d vs %d" % (self.dim, other.dim))
        out = dict(self.terms)
        for key, c in other.terms.items():
            acc = out.get(key, 0.0) + c
            if acc == 0:
                out.pop(key, None)
            else:
                out[key] = acc
        p = MixedPoly(self.dim)
        p.terms = out
        return p

    def __neg__(self) -> "MixedPoly":
        p = MixedPoly(self.dim)
        p.terms = {k: -c for k, c in self.terms.items()}
        return p

    def __sub__(self, other: "MixedPoly") -> "MixedPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        if self.dim != other.dim:
            raise ValueError("dimension mismatch: %d vs %d" % (self.dim, other.dim))
        out: dict[TermKey, complex] = {}
        for (a1, b1, p1), c1 in self.terms.items():
            for (a2, b2, p2), c2 in other.terms.items():
                key = (
                    tuple(x + y for x, y in zip(a1, a2)),
                    tuple(x + y for x, y in zip(b1, b2)),
                    tuple(x + y for x, y in zip(p1, p2)),
                )
                acc = out.get(key, 0.0) + c1 * c2
                if acc == 0:
                    out.pop(key, None)
                else:
                    out[key] = acc
        p = MixedPoly(self.dim)
        p.terms = out
        return p

    __rmul__ = __mul__

    def scale(self, c: complex) -> "MixedPoly":
        if c == 0:
            return MixedPoly(self.dim)
        p = MixedPoly(self.dim)
        p.terms = {k: v * c for k, v in self.terms.items()}
        return p

    def conj(self) -> "MixedPoly":
        """Complex conjugate; swaps zeta and conj(zeta) exponents.

        Refuses parameter dependence: the parameter slot is reserved for
        holomorphic data and has no conjugate counterpart here.
        """
        for (_, _, p) in self.terms:
            if sum(p) != 0:
                raise ValueError("conj of a parameter-dependent polynomial is not representable")
        out = MixedPoly(self.dim)
        out.terms = {(b, a, p): np.conj(c) for (a, b, p), c in self.terms.items()}
        return out

    # ---- calculus ------------------------------------------------------

    def dbar(self, alpha: tuple[int, ...]) -> "MixedPoly":
        """Antiholomorphic derivative d^|alpha| / d conj(zeta)^alpha."""
        if len(alpha) != self.dim:
            raise ValueError("alpha must have length %d" % self.dim)
        out = self
        for j, k in enumerate(alpha):
            for _ in range(k):
                out = out._d_anti(j)
        return out

    def _d_anti(self, j: int) -> "MixedPoly":
        out: dict[TermKey, complex] = {}
        for (a, b, p), c in self.terms.items():
            if b[j] == 0:
                continue
            nb = list(b)
            nb[j] -= 1
            out[(a, tuple(nb), p)] = c * b[j]
        q = MixedPoly(self.dim)
        q.terms = out
        return q

    def dholo(self, j: int) -> "MixedPoly":
        """d/d zeta_j (j in 1..dim)."""
        out: dict[TermKey, complex] = {}
        for (a, b, p), c in self.terms.items():
            if a[j - 1] == 0:
                continue
            na = list(a)
            na[j - 1] -= 1
            out[(tuple(na), b, p)] = c * a[j - 1]
        q = MixedPoly(self.dim)
        q.terms = out
        return q

    def dparam(self, j: int) -> "MixedPoly":
        """d/d w_j (j in 1..dim)."""
        out: dict[TermKey, complex] = {}
        for (a, b, p), c in self.terms.items():
            if p[j - 1] == 0:
                continue
            np_ = list(p)
            np_[j - 1] -= 1
            out[(a, b, tuple(np_))] = c * p[j - 1]
        q = MixedPoly(self.dim)
        q.terms = out
        return q

    # ---- substitutions -------------------------------------------------

    def to_param(self) -> "MixedPoly":
        """Substitute zeta -> w, moving holomorphic exponents to the
        parameter slot.  Requires a holomorphic polynomial."""
        out: dict[TermKey, complex] = {}
        z = _zeros(self.dim)
        for (a, b, p), c in self.terms.items():
            if sum(b) != 0:
                raise ValueError("to_param requires a holomorphic polynomial")
            key = (z, b, tuple(x + y for x, y in zip(a, p)))
            out[key] = out.get(key, 0.0) + c
        q = MixedPoly(self.dim)
        q.terms = out
        return q

    def shift_holo(self, sign: int) -> "MixedPoly":
        """Substitute zeta_j -> zeta_j + sign*w_j (binomial expansion).

        With sign=+1 this rewrites a polynomial in (zeta, w) as a
        polynomial in (v, w) with zeta = v + w; with sign=-1 it undoes
        that (v = zeta - w).  Antiholomorphic exponents must be absent.
        """
        if sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        out = MixedPoly(self.dim)
        for (a, b, p), c in self.terms.items():
            if sum(b) != 0:
                raise ValueError("shift_holo requires a holomorphic polynomial")
            expanded = [((_zeros(self.dim), b, p), c)]
            for j in range(self.dim):
                if a[j] == 0:
                    continue
                nxt = []
                for (aa, bb, pp), cc in expanded:
                    for i in range(a[j] + 1):
                        coef = cc * _binom(a[j], i) * (sign ** (a[j] - i))
                        na = list(aa)
                        na[j] += i
                        npp = list(pp)
                        npp[j] += a[j] - i
                        nxt.append(((tuple(na), bb, tuple(npp)), coef))
                expanded = nxt
            for key, cc in expanded:
                out.terms[key] = out.terms.get(key, 0.0) + cc
        out.terms = {k: c for k, c in out.terms.items() if c != 0}
        return out

    # ---- evaluation ----------------------------------------------------

    def eval(self, zeta, w=None):
        """Evaluate at zeta (shape (..., n)) and parameter w (shape (n,) or
        broadcastable).  Returns a scalar or an array matching zeta's batch
        shape."""
        zeta = np.asarray(zeta, dtype=complex)
        scalar_in = zeta.ndim == 1
        zt = zeta[None, :] if scalar_in else zeta
        if zt.shape[-1] != self.dim:
            raise ValueError("zeta has dimension %d, expected %d" % (zt.shape[-1], self.dim))
        if w is None:
            w = np.zeros(self.dim, dtype=complex)
        w = np.asarray(w, dtype=complex)
        zc = np.conj(zt)
        acc = np.zeros(zt.shape[:-1], dtype=complex)
        for (a, b, p), c in self.terms.items():
            t = np.full(zt.shape[:-1], c, dtype=complex)
            for j in range(self.dim):
                if a[j]:
                    t = t * zt[..., j] ** a[j]
                if b[j]:
                    t = t * zc[..., j] ** b[j]
                if p[j]:
                    t = t * w[..., j] ** p[j]
            acc += t
        return acc[0] if scalar_in else acc

    # ---- canonical form and wire format --------------------------------

    def sorted_terms(self) -> list[tuple[TermKey, complex]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def to_obj(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"holo": list(a), "anti": list(b), "param": list(p),
                 "re": float(np.real(c)), "im": float(np.imag(c))}
                for (a, b, p), c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "MixedPoly":
        dim = int(obj["dim"])
        terms: dict[TermKey, complex] = {}
        for t in obj.get("terms", []):
            # omitted exponent vectors mean zero exponents
            t = {slot: t.get(slot, [0] * dim) for slot in ("holo", "anti", "param")} \
                | {"re": t["re"], "im": t.get("im", 0.0)}
            for slot in ("holo", "anti", "param"):
                if len(t[slot]) != dim:
                    raise ValueError("term %s has length %d, expected %d" % (slot, len(t[slot]), dim))
                if any((not isinstance(e, int)) or e < 0 for e in t[slot]):
                    raise ValueError("exponents must be non-negative integers")
            key = (tuple(t["holo"]), tuple(t["anti"]), tuple(t["param"]))
            terms[key] = terms.get(key, 0.0) + complex(t["re"], t["im"])
        return cls(dim, terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, MixedPoly) and self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, tuple(self.sorted_terms())))

    def __repr__(self) -> str:
        if not self.terms:
            return "MixedPoly(%d, 0)" % self.dim
        bits = []
        for (a, b, p), c in self.sorted_terms():
            factors = []
            for j in range(self.dim):
                if a[j]:
                    factors.append("z%d^%d" % (j + 1, a[j]) if a[j] > 1 else "z%d" % (j + 1))
                if b[j]:
                    factors.append("~z%d^%d" % (j + 1, b[j]) if b[j] > 1 else "~z%d" % (j + 1))
                if p[j]:
                    factors.append("w%d^%d" % (j + 1, p[j]) if p[j] > 1 else "w%d" % (j + 1))
            mono = "*".join(factors) if factors else "1"
            bits.append("(%s)*%s" % (_fmt_c(c), mono))
        return " + ".join(bits)


def _fmt_c(c: complex) -> str:
    if c.imag == 0:
        return "%g" % c.real
    return "%g%+gj" % (c.real, c.imag)


_BINOM_CACHE: dict[tuple[int, int], int] = {}


def _binom(n: int, k: int) -> int:
    key = (n, k)
    if key not in _BINOM_CACHE:
        v = 1
        for i in range(k):
            v = v * (n - i) // (i + 1)
        _BINOM_CACHE[key] = v
    return _BINOM_CACHE[key]


# ---- flat functional API ------------------------------------------------

def poly_eval(p: MixedPoly, zeta, w=None):
    return p.eval(zeta, w)


def poly_arith(a: MixedPoly, b: MixedPoly | None, op: str, c: complex | None = None) -> MixedPoly:
    """Dispatch arithmetic: op in {"add", "sub", "mul", "scale"}.

    "scale" ignores b and multiplies a by the scalar c.
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "scale":
        if c is None:
            raise ValueError("scale requires the scalar c")
        return a.scale(c)
    raise ValueError("unknown op %r" % op)


def poly_conj(p: MixedPoly) -> MixedPoly:
    return p.conj()


def poly_dbar(p: MixedPoly, alpha: tuple[int, ...]) -> MixedPoly:
    return p.dbar(alpha)
