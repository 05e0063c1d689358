"""End-to-end division: given f and phi, produce psi with f.psi = phi.

Every driver here instantiates the same weighted decomposition.  With U, R
the regularized division/residue currents of f, H^l_k the Hefer morphisms
interpolating the complex between z and zeta, and g a weight centered at z,

    phi(z) = f(z) . T phi(z) + S phi(z),

    T phi(z) = integral( sum_k H^1_k (U_k phi) ^ g ),
    S phi(z) = integral( sum_k H^0_k (R_k phi) ^ g ),

where the e_j-components of the first integrand give the candidate solution
tuple psi_j = (T phi)_j.  When the zero set of f misses the support of the
weight, S phi -> 0 with eps and psi solves the division problem; otherwise
S phi converges to the residue obstruction, which vanishes exactly when phi
belongs to the (Briancon-Skoda closure of the) ideal.  The decomposition
holds at every eps > 0 up to quadrature error, so the residual
|f(z) psi(z) + S phi(z) - phi(z)| reported per point is a direct check of
the computed quantities, not a tautology.

Epsilon handling: when min |f|^2 (or min det(f f^*)) over the quadrature
nodes stays away from zero, a single exact pass at eps = 0 is taken;
otherwise the geometric schedule is swept and every output component is
Aitken-extrapolated.  The extrapolation error bar does not include the
quadrature error of the individual passes.

The quadrature ball always breaks panels at rho0 and rho1 where the radial
cutoff is only C^2; in schedule mode the radial panels additionally refine
geometrically toward the origin, where the fixtures place the zeros.  Zero
sets crossing the shell elsewhere converge more slowly and may need a
custom rule.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .conventions import (
    CONVENTION_VERSION, TWO_PI_I, interleave_sign, lebesgue_factor,
    residue_normalization,
)
from .cpoly import MixedPoly
from .currents import (
    ENData, HoloMatrix, KoszulData, default_residue_rule, eps_schedule,
    extrapolate, residue_pairing, residue_pairing_en, sigma_values,
)
from .exterior import ExtElem, anti, eframe, holo, qframe
from .hefer import get_family, hefer_form
from .quadrature import QuadRule, geometric_breakpoints, integrate, make_rule
from .weights import cutoff_weight


def _c2(c) -> list[float]:
    c = complex(c)
    return [float(c.real), float(c.imag)]


def _calibration(n: int) -> dict:
    return {
        "delta_scale": _c2(TWO_PI_I),
        "lebesgue_factor": _c2(lebesgue_factor(n)),
        "interleave_sign": interleave_sign(n),
        "residue_normalization": _c2(residue_normalization(n)),
    }


class ProblemError(ValueError):
    """Contract violation, carrying the JSON pointer of the offending field."""

    def __init__(self, pointer: str, message: str):
        super().__init__("%s: %s" % (pointer, message))
        self.pointer = pointer
        self.message = message


# ---- problem description ----------------------------------------------------


@dataclass
class WeightConfig:
    rho0: float = 1.1
    rho1: float = 1.4


@dataclass
class QuadConfig:
    radial: int = 16
    angular: int = 24
    npanels: int = 5
    ratio: float = 3.0


@dataclass
class EpsConfig:
    base: float = 0.25
    count: int = 6
    mode: str = "auto"      # auto | schedule | zero

    def schedule(self) -> list[float]:
        return eps_schedule(self.base, self.count)


@dataclass
class ProblemSpec:
    """A division problem: f, phi, evaluation points, and solver knobs."""

    f: HoloMatrix
    phi: list[MixedPoly]
    z_points: np.ndarray
    weight: WeightConfig = field(default_factory=WeightConfig)
    quad: QuadConfig = field(default_factory=QuadConfig)
    eps: EpsConfig = field(default_factory=EpsConfig)
    family: str = "hs"
    seed: int = 0

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def m(self) -> int:
        return self.f.m

    @property
    def r(self) -> int:
        return self.f.r

    def validate(self) -> list[ProblemError]:
        errs = []
        f = self.f
        if f.n < 1 or f.n > 3:
            errs.append(ProblemError("/f", "supported dimensions are n = 1..3, got %d" % f.n))
        if f.m < f.r:
            errs.append(ProblemError("/f", "need m >= r for generic surjectivity, got %dx%d" % (f.r, f.m)))
        else:
            # generic surjectivity probe: det(f f^*) must be nonzero somewhere
            rng = np.random.default_rng(0)
            pts = rng.standard_normal((64, f.n)) + 1j * rng.standard_normal((64, f.n))
            pts *= 0.5 / np.maximum(np.linalg.norm(pts, axis=-1, keepdims=True), 1e-12)
            F = f.eval(pts)
            v = np.real(np.linalg.det(F @ np.conj(np.swapaxes(F, -1, -2))))
            if float(np.max(v)) < 1e-12:
                errs.append(ProblemError("/f", "matrix is nowhere surjective on sample points"))
        if len(self.phi) != f.r:
            errs.append(ProblemError("/phi", "phi must have r = %d components, got %d" % (f.r, len(self.phi))))
        for i, p in enumerate(self.phi):
            if p.dim != f.n:
                errs.append(ProblemError("/phi/%d" % i, "dimension %d, expected %d" % (p.dim, f.n)))
            elif not p.is_holomorphic():
                errs.append(ProblemError("/phi/%d" % i, "phi must be holomorphic"))
        if not 1.0 < self.weight.rho0 < self.weight.rho1:
            errs.append(ProblemError("/weight/rho0", "need 1 < rho0 < rho1, got (%g, %g)"
                                     % (self.weight.rho0, self.weight.rho1)))
        z = np.atleast_2d(np.asarray(self.z_points, dtype=complex))
        if z.shape[-1] != f.n:
            errs.append(ProblemError("/z_points", "points have dimension %d, expected %d"
                                     % (z.shape[-1], f.n)))
        else:
            radii = np.linalg.norm(z, axis=-1)
            for i in np.nonzero(radii >= self.weight.rho0)[0]:
                errs.append(ProblemError("/z_points/%d" % i,
                                         "|z| = %g must stay below rho0 = %g"
                                         % (radii[i], self.weight.rho0)))
        for name in ("radial", "angular", "npanels"):
            if getattr(self.quad, name) < 1:
                errs.append(ProblemError("/quadrature/%s" % name, "must be a positive integer"))
        if not 0.0 < self.eps.base < 1.0:
            errs.append(ProblemError("/eps/base", "base must lie in (0, 1)"))
        if self.eps.count < 1:
            errs.append(ProblemError("/eps/count", "count must be >= 1"))
        if self.eps.mode not in ("auto", "schedule", "zero"):
            errs.append(ProblemError("/eps/mode", "mode must be auto, schedule or zero"))
        if self.family not in ("hs", "cutoff"):
            errs.append(ProblemError("/family", "family must be hs or cutoff"))
        return errs

    def to_obj(self) -> dict:
        z = np.atleast_2d(np.asarray(self.z_points, dtype=complex))
        return {
            "f": self.f.to_obj(),
            "phi": [p.to_obj() for p in self.phi],
            "z_points": [[_c2(c) for c in row] for row in z],
            "weight": {"rho0": self.weight.rho0, "rho1": self.weight.rho1},
            "quadrature": {"radial": self.quad.radial, "angular": self.quad.angular,
                           "npanels": self.quad.npanels, "ratio": self.quad.ratio},
            "eps": {"base": self.eps.base, "count": self.eps.count, "mode": self.eps.mode},
            "family": self.family,
            "seed": self.seed,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ProblemSpec":
        if not isinstance(obj, dict):
            raise ProblemError("/", "problem must be a JSON object")
        try:
            fobj = obj["f"]
        except KeyError:
            raise ProblemError("/f", "missing") from None
        try:
            if isinstance(fobj, dict):
                f = HoloMatrix.from_obj(fobj)
            else:
                f = HoloMatrix([[MixedPoly.from_obj(t) for t in row] for row in fobj])
        except ProblemError:
            raise
        except Exception as e:
            raise ProblemError("/f", str(e)) from None
        phis = []
        for i, pobj in enumerate(obj.get("phi", [])):
            try:
                phis.append(MixedPoly.from_obj(pobj))
            except Exception as e:
                raise ProblemError("/phi/%d" % i, str(e)) from None
        zobj = obj.get("z_points", [])
        pts = []
        for i, row in enumerate(zobj):
            try:
                pts.append([complex(c[0], c[1]) for c in row])
            except Exception:
                raise ProblemError("/z_points/%d" % i,
                                   "points are lists of [re, im] pairs") from None
        z = np.asarray(pts, dtype=complex) if pts else np.zeros((0, f.n), dtype=complex)

        def section(name, cls_, fields):
            sub = obj.get(name, {})
            if not isinstance(sub, dict):
                raise ProblemError("/%s" % name, "must be an object")
            kw = {}
            for fname, conv in fields:
                if fname in sub:
                    try:
                        kw[fname] = conv(sub[fname])
                    except Exception:
                        raise ProblemError("/%s/%s" % (name, fname), "bad value") from None
            return cls_(**kw)

        weight = section("weight", WeightConfig, [("rho0", float), ("rho1", float)])
        quad = section("quadrature", QuadConfig, [("radial", int), ("angular", int),
                                                  ("npanels", int), ("ratio", float)])
        eps = section("eps", EpsConfig, [("base", float), ("count", int), ("mode", str)])
        return cls(f=f, phi=phis, z_points=z, weight=weight, quad=quad, eps=eps,
                   family=str(obj.get("family", "hs")), seed=int(obj.get("seed", 0)))


# ---- reports ----------------------------------------------------------------


@dataclass
class DivisionRow:
    z: np.ndarray
    psi: np.ndarray
    psi_err: np.ndarray
    s: np.ndarray
    s_err: np.ndarray
    residual: float
    psi_trace: np.ndarray       # (neps, m)
    s_trace: np.ndarray         # (neps, r)

    def to_obj(self) -> dict:
        return {
            "z": [_c2(c) for c in self.z],
            "psi": [_c2(c) for c in self.psi],
            "psi_err": [float(e) for e in self.psi_err],
            "s": [_c2(c) for c in self.s],
            "s_err": [float(e) for e in self.s_err],
            "residual": float(self.residual),
            "psi_trace": [[_c2(c) for c in row] for row in self.psi_trace],
            "s_trace": [[_c2(c) for c in row] for row in self.s_trace],
        }


@dataclass
class DivisionReport:
    n: int
    m: int
    r: int
    mode: str
    family: str
    eps_list: list[float]
    weight: WeightConfig
    rule_params: dict
    rows: list[DivisionRow]
    seed: int = 0

    def max_residual(self) -> float:
        return max((row.residual for row in self.rows), default=0.0)

    def psi_matrix(self) -> np.ndarray:
        return np.array([row.psi for row in self.rows])

    def to_obj(self) -> dict:
        return {
            "convention": CONVENTION_VERSION,
            "calibration": _calibration(self.n),
            "dims": {"n": self.n, "m": self.m, "r": self.r},
            "mode": self.mode,
            "family": self.family,
            "eps_list": [float(e) for e in self.eps_list],
            "weight": {"rho0": self.weight.rho0, "rho1": self.weight.rho1},
            "rule": self.rule_params,
            "seed": self.seed,
            "rows": [row.to_obj() for row in self.rows],
            "max_residual": float(self.max_residual()),
        }


# ---- the engine --------------------------------------------------------------


def _division_rule(n: int, weight: WeightConfig, quad: QuadConfig, refined: bool) -> QuadRule:
    # the radial cutoff is only C^2 at rho0 and rho1: keep them as breakpoints
    if refined:
        bks = geometric_breakpoints(0.0, weight.rho0, quad.npanels, quad.ratio)
    else:
        bks = [0.0, weight.rho0]
    bks = bks + [weight.rho1]
    return make_rule("ball", n, rho=weight.rho1, radial=quad.radial,
                     angular=quad.angular, panels=bks)


def _limit(vals) -> tuple[complex, float]:
    if len(vals) == 1:
        return complex(vals[0]), 0.0
    return extrapolate(vals)


_ESCALAR = ((), ())


class _DivisionEngine:
    """Shared driver: precomputes everything z-independent once, then per z
    the frame-component arrays of the Hefer-transported integrands, so an
    epsilon sweep costs only pointwise scalar factors and reductions."""

    def __init__(self, hm: HoloMatrix, phis: list[MixedPoly],
                 weight: WeightConfig, quad: QuadConfig, eps_cfg: EpsConfig,
                 family: str):
        self.hm = hm
        n, m, r = hm.n, hm.m, hm.r
        self.dims = (n, m, r)
        self.weight = weight
        self.family = family
        self.fam = get_family(hm.rows, n)
        plain = _division_rule(n, weight, quad, refined=False)
        # scale-invariant probe; GL nodes near the origin make min |f|^2
        # genuinely tiny whenever the zero set crosses the support
        probe = self._vanishing(plain.nodes)
        self.z_empty = bool(np.min(probe) > 1e-3 * float(np.max(probe)))
        mode = eps_cfg.mode
        if mode == "auto":
            mode = "zero" if self.z_empty else "schedule"
        if mode == "zero":
            self.rule = plain
            self.eps_list = [0.0]
        else:
            self.rule = _division_rule(n, weight, quad, refined=True)
            self.eps_list = eps_cfg.schedule()
        self.mode = mode
        nodes = self.rule.nodes
        self.pv = np.stack([p.eval(nodes) for p in phis])
        self.phis = phis
        if r == 1:
            self.data = KoszulData(hm, nodes, family=family)
            if family == "cutoff":
                self.beta_u = {k: self.data.beta.wedge(u) for k, u in self.data.u.items()}
        else:
            self.data = ENData(hm, nodes)
            dv = self.data.dv
            self.dvform = ExtElem(self.dims, {((anti(a),), ()): dv[..., a - 1]
                                              for a in range(1, n + 1)})

    def _vanishing(self, nodes) -> np.ndarray:
        F = self.hm.eval(nodes)
        if self.hm.r == 1:
            return np.sum(np.abs(F[..., 0, :]) ** 2, axis=-1)
        return sigma_values(F)[1]

    def solve_at(self, z) -> DivisionRow:
        n, m, r = self.dims
        z = np.asarray(z, dtype=complex)
        gz = cutoff_weight(self.rule.nodes, z, self.dims,
                           self.weight.rho0, self.weight.rho1)
        if r == 1:
            psi_tr, s_tr = self._sweep_koszul(z, gz)
        else:
            psi_tr, s_tr = self._sweep_en(z, gz)
        psi = np.empty(m, dtype=complex)
        psi_err = np.empty(m)
        for j in range(m):
            psi[j], psi_err[j] = _limit(psi_tr[:, j])
        s = np.empty(r, dtype=complex)
        s_err = np.empty(r)
        for l in range(r):
            s[l], s_err[l] = _limit(s_tr[:, l])
        Fz = self.hm.eval(z)
        phz = np.array([p.eval(z) for p in self.phis])
        residual = float(np.max(np.abs(Fz @ psi + s - phz)))
        return DivisionRow(z=z, psi=psi, psi_err=psi_err, s=s, s_err=s_err,
                           residual=residual, psi_trace=psi_tr, s_trace=s_tr)

    # -- r = 1

    def _sweep_koszul(self, z, gz):
        data = self.data
        nodes = self.rule.nodes
        m = self.dims[1]
        leb = lebesgue_factor(self.dims[0])
        base_u = data.su if self.family == "hs" else data.u
        A = {}
        for k in range(1, data.kmax_u + 1):
            H = self.fam.morphism(1, k).eval_at(nodes, z)
            comps = H.apply(base_u[k]).wedge(gz).volume_components()
            A[k] = [comps.get(((eframe(j),), ())) for j in range(1, m + 1)]
        # R_0 = eps/(t+eps) in both families; transported by the identity
        B = {0: gz.top_volume_coeff()}
        for k in range(1, data.kmax_r + 1):
            H = self.fam.morphism(0, k).eval_at(nodes, z)
            base = data.dspow[k] if self.family == "hs" else self.beta_u[k]
            B[k] = H.apply(base).wedge(gz).volume_components().get(_ESCALAR)
        t = data.t
        pv = self.pv[0]
        neps = len(self.eps_list)
        psi_tr = np.zeros((neps, m), dtype=complex)
        s_tr = np.zeros((neps, 1), dtype=complex)
        for ie, eps in enumerate(self.eps_list):
            den = t + eps
            if self.family == "hs":
                ufac = {k: den ** -float(k) for k in A}
                rfac = {k: eps / den ** (k + 1) for k in B}
            else:
                chi = t / den
                ufac = {k: chi for k in A}
                rfac = {k: (eps / den if k == 0 else eps / den ** 2) for k in B}
            for k, arrs in A.items():
                fac = pv * ufac[k]
                for j, arr in enumerate(arrs):
                    if arr is not None:
                        psi_tr[ie, j] += leb * integrate(self.rule, arr * fac)
            for k, arr in B.items():
                if arr is None:
                    continue
                s_tr[ie, 0] += leb * integrate(self.rule, arr * pv * rfac[k])
        return psi_tr, s_tr

    # -- r >= 2

    def _sweep_en(self, z, gz):
        data = self.data
        nodes = self.rule.nodes
        n, m, r = self.dims
        leb = lebesgue_factor(n)
        A = {}
        for k in range(1, data.length + 1):
            H = self.fam.morphism(1, k).eval_at(nodes, z)
            for i in range(1, r + 1):
                col = data.u_cols[k][((qframe(i),), ())]
                comps = H.apply(col).wedge(gz).volume_components()
                A[(k, i)] = [comps.get(((eframe(j),), ())) for j in range(1, m + 1)]
        P = {}
        for k in range(1, min(data.length, n) + 1):
            H = self.fam.morphism(0, k).eval_at(nodes, z)
            for i in range(1, r + 1):
                elem = self.dvform.wedge(data.u_cols[k][((qframe(i),), ())])
                comps = H.apply(elem).wedge(gz).volume_components()
                P[(k, i)] = [comps.get(((qframe(l),), ())) for l in range(1, r + 1)]
        B0 = gz.top_volume_coeff()
        v = data.v
        neps = len(self.eps_list)
        psi_tr = np.zeros((neps, m), dtype=complex)
        s_tr = np.zeros((neps, r), dtype=complex)
        for ie, eps in enumerate(self.eps_list):
            den = v + eps
            chi = v / den
            rfac = eps / den ** 2
            for (k, i), arrs in A.items():
                fac = self.pv[i - 1] * chi
                for j, arr in enumerate(arrs):
                    if arr is not None:
                        psi_tr[ie, j] += leb * integrate(self.rule, arr * fac)
            for l in range(r):
                s_tr[ie, l] = leb * integrate(self.rule, B0 * self.pv[l] * (1.0 - chi))
            for (k, i), arrs in P.items():
                fac = self.pv[i - 1] * rfac
                for l, arr in enumerate(arrs):
                    if arr is not None:
                        s_tr[ie, l] += leb * integrate(self.rule, arr * fac)
        return psi_tr, s_tr


def _run_division(hm: HoloMatrix, phis: list[MixedPoly], z_points,
                  weight: WeightConfig | None, quad: QuadConfig | None,
                  eps_cfg: EpsConfig | None, family: str, seed: int = 0,
                  threads: int = 1) -> DivisionReport:
    weight = weight or WeightConfig()
    quad = quad or QuadConfig()
    eps_cfg = eps_cfg or EpsConfig()
    z = np.atleast_2d(np.asarray(z_points, dtype=complex))
    spec = ProblemSpec(f=hm, phi=phis, z_points=z, weight=weight, quad=quad,
                       eps=eps_cfg, family=family, seed=seed)
    errs = spec.validate()
    if errs:
        raise errs[0]
    engine = _DivisionEngine(hm, phis, weight, quad, eps_cfg, family)
    if threads > 1 and len(z) > 1:
        # each z is an independent pure task; map preserves order, and the
        # per-point reductions never regroup, so output is thread-invariant
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(engine.solve_at, z))
    else:
        rows = [engine.solve_at(pt) for pt in z]
    return DivisionReport(n=hm.n, m=hm.m, r=hm.r, mode=engine.mode,
                          family=family if hm.r == 1 else "determinantal",
                          eps_list=list(engine.eps_list), weight=weight,
                          rule_params=engine.rule.params, rows=rows, seed=seed)


# ---- public drivers ----------------------------------------------------------


def reproduce(phi: MixedPoly, z_points, rho0: float = 1.1, rho1: float = 1.4,
              radial: int = 24, angular: int = 48) -> np.ndarray:
    """Evaluate phi at interior points through the weight alone:
    phi(z) = integral(phi ^ g).  Only the shell part of g carries bidegree
    (n, n), so the integral runs over rho0 <= |zeta| <= rho1."""
    n = phi.dim
    if not 1.0 < rho0 < rho1:
        raise ProblemError("/weight/rho0", "need 1 < rho0 < rho1")
    rule = make_rule("shell", n, r0=rho0, r1=rho1, radial=radial, angular=angular)
    pv = phi.eval(rule.nodes)
    z = np.atleast_2d(np.asarray(z_points, dtype=complex))
    leb = lebesgue_factor(n)
    out = np.empty(z.shape[0], dtype=complex)
    for i, pt in enumerate(z):
        g = cutoff_weight(rule.nodes, pt, (n, 1, 1), rho0, rho1, parts="shell")
        out[i] = leb * integrate(rule, g.top_volume_coeff() * pv)
    return out


def divide_koszul(row: list[MixedPoly], phi: MixedPoly, z_points, *,
                  family: str = "hs", weight: WeightConfig | None = None,
                  quad: QuadConfig | None = None, eps: EpsConfig | None = None,
                  seed: int = 0, threads: int = 1) -> DivisionReport:
    """Division against a 1 x m row via the Koszul currents.

    If the zero set meets the support of the weight the eps schedule is
    engaged; otherwise a single eps = 0 pass is exact up to quadrature.
    """
    hm = HoloMatrix.from_row(row)
    return _run_division(hm, [phi], z_points, weight, quad, eps, family, seed,
                         threads=threads)


def divide_matrix(f, phi, z_points, *, family: str = "hs",
                  weight: WeightConfig | None = None, quad: QuadConfig | None = None,
                  eps: EpsConfig | None = None, seed: int = 0,
                  threads: int = 1) -> DivisionReport:
    """Division against an r x m matrix.  r = 1 reduces to divide_koszul;
    r >= 2 runs the determinantal complex currents."""
    hm = _as_matrix(f)
    phis = list(phi) if isinstance(phi, (list, tuple)) else [phi]
    return _run_division(hm, phis, z_points, weight, quad, eps, family, seed,
                         threads=threads)


def solve(problem: ProblemSpec, threads: int = 1) -> DivisionReport:
    """Run the division drivers on a validated ProblemSpec."""
    errs = problem.validate()
    if errs:
        raise errs[0]
    return _run_division(problem.f, problem.phi, problem.z_points, problem.weight,
                         problem.quad, problem.eps, problem.family, problem.seed,
                         threads=threads)


@dataclass
class InterpolationRow:
    z: np.ndarray
    s: np.ndarray
    s_err: np.ndarray
    residual: float

    def to_obj(self) -> dict:
        return {"z": [_c2(c) for c in self.z], "s": [_c2(c) for c in self.s],
                "s_err": [float(e) for e in self.s_err],
                "residual": float(self.residual)}


@dataclass
class InterpolationReport:
    n: int
    mode: str
    rows: list[InterpolationRow]
    division: DivisionReport

    def s_matrix(self) -> np.ndarray:
        return np.array([row.s for row in self.rows])

    def to_obj(self) -> dict:
        return {"convention": CONVENTION_VERSION, "calibration": _calibration(self.n),
                "mode": self.mode, "rows": [row.to_obj() for row in self.rows]}


def interpolate(f, phi, z_points, *, family: str = "hs",
                weight: WeightConfig | None = None, quad: QuadConfig | None = None,
                eps: EpsConfig | None = None, seed: int = 0,
                threads: int = 1) -> InterpolationReport:
    """The residue side of the decomposition: S phi(z), the value at z of
    the obstruction carried by the residue of f.

    S phi only depends on the class of phi modulo the image of f (two
    representatives phi and phi + f.eta give the same values up to the
    reported errors), and the decomposition residual ties it back to phi:
    f(z) psi(z) + S phi(z) = phi(z).
    """
    rep = divide_matrix(f, phi, z_points, family=family, weight=weight,
                        quad=quad, eps=eps, seed=seed, threads=threads)
    rows = [InterpolationRow(z=row.z, s=row.s, s_err=row.s_err, residual=row.residual)
            for row in rep.rows]
    return InterpolationReport(n=rep.n, mode=rep.mode, rows=rows, division=rep)


# ---- Berndtsson-style single-weight division ---------------------------------


def _eval_form(elem: ExtElem, zeta, w) -> ExtElem:
    terms = {}
    for key, c in elem.terms.items():
        terms[key] = c.eval(zeta, w) if isinstance(c, MixedPoly) else c
    return ExtElem(elem.dims, terms)


@dataclass
class BerndtssonRow:
    z: np.ndarray
    psi: np.ndarray
    defect: complex
    residual: float

    def to_obj(self) -> dict:
        return {"z": [_c2(c) for c in self.z], "psi": [_c2(c) for c in self.psi],
                "defect": _c2(self.defect), "residual": float(self.residual)}


@dataclass
class BerndtssonReport:
    n: int
    m: int
    eps: float
    power: int
    rows: list[BerndtssonRow]

    def max_residual(self) -> float:
        return max((row.residual for row in self.rows), default=0.0)

    def to_obj(self) -> dict:
        return {"convention": CONVENTION_VERSION, "calibration": _calibration(self.n),
                "eps": self.eps, "power": self.power,
                "rows": [row.to_obj() for row in self.rows]}


def berndtsson_divide(row: list[MixedPoly], phi: MixedPoly, z_points, *,
                      eps: float = 1e-4, weight: WeightConfig | None = None,
                      quad: QuadConfig | None = None) -> BerndtssonReport:
    """Division at a single fixed eps through the weight

        g' = eps/(|f|^2+eps) + f(z).sigma^eps + sum_j (dbar sigma^eps_j) ^ h_j,

    where sigma^eps = conj(f)/(|f|^2+eps) and h_j are the Hefer forms of the
    entries; g' = 1 - nabla(h.sigma^eps) is nabla-closed with full value 1 at
    zeta = z, so (g')^N ^ g reproduces.  Expanding the N-th power in the
    middle term and stripping one f_j(z) factor yields psi; the remainder

        defect(z) = integral( (A + C)^N phi ^ g )

    measures the failure of exact division at this eps and is O(eps) when
    the zero set misses the weight's support.  N = min(n+1, m) kills the
    pure C-power when m > n.
    """
    hm = HoloMatrix.from_row(row)
    n, m = hm.n, hm.m
    if not phi.is_holomorphic():
        raise ProblemError("/phi/0", "phi must be holomorphic")
    if eps <= 0:
        raise ProblemError("/eps/base", "berndtsson_divide needs eps > 0")
    weight = weight or WeightConfig()
    quad = quad or QuadConfig()
    dims = (n, m, 1)
    N = min(n + 1, m)
    # refine toward the origin when the zero set is inside, as in division
    plain = _division_rule(n, weight, quad, refined=False)
    tprobe = np.sum(np.abs(hm.eval(plain.nodes)[..., 0, :]) ** 2, axis=-1)
    refined = not (np.min(tprobe) > 1e-3 * float(np.max(tprobe)))
    rule = _division_rule(n, weight, quad, refined=True) if refined else plain
    nodes = rule.nodes
    F = hm.eval(nodes)[..., 0, :]
    dF = hm.d_eval(nodes)[..., :, 0, :]
    t = np.sum(np.abs(F) ** 2, axis=-1)
    den = t + eps
    sig = np.conj(F) / den[..., None]
    Afac = eps / den
    beta = np.einsum("...j,...aj->...a", F, np.conj(dF))
    pv = phi.eval(nodes)
    leb = lebesgue_factor(n)
    z = np.atleast_2d(np.asarray(z_points, dtype=complex))
    out = []
    for pt in z:
        gz = cutoff_weight(nodes, pt, dims, weight.rho0, weight.rho1)
        hz = [_eval_form(hefer_form(p, dims), nodes, pt) for p in row]
        C = ExtElem.zero(dims)
        for j in range(1, m + 1):
            # dbar sigma^eps_j = dbar conj(f_j)/(t+eps) - sigma^eps_j beta/(t+eps)
            dsg = ExtElem(dims, {((anti(a),), ()):
                                 np.conj(dF[..., a - 1, j - 1]) / den
                                 - sig[..., j - 1] * beta[..., a - 1] / den
                                 for a in range(1, n + 1)})
            C = C + dsg.wedge(hz[j - 1])
        Cpow = {0: ExtElem.scalar(dims, np.ones_like(t) + 0j)}
        for q in range(1, min(N, n) + 1):
            Cpow[q] = Cpow[q - 1].wedge(C)

        def ac_power(p):
            acc = ExtElem.zero(dims)
            for q in range(0, min(p, n) + 1):
                acc = acc + Cpow[q].scale(math.comb(p, q) * Afac ** (p - q))
            return acc

        Fz = hm.eval(pt)[0]
        Bf = np.einsum("j,...j->...", Fz, sig)
        inner = ExtElem.zero(dims)
        for l in range(1, N + 1):
            inner = inner + ac_power(N - l).scale(math.comb(N, l) * Bf ** (l - 1))
        top = inner.wedge(gz).top_volume_coeff()
        psi = np.array([leb * integrate(rule, top * sig[..., j] * pv) for j in range(m)])
        dtop = ac_power(N).wedge(gz).top_volume_coeff()
        defect = leb * integrate(rule, dtop * pv)
        residual = abs(Fz @ psi + defect - phi.eval(pt))
        out.append(BerndtssonRow(z=pt, psi=psi, defect=complex(defect),
                                 residual=float(residual)))
    return BerndtssonReport(n=n, m=m, eps=eps, power=N, rows=out)


# ---- Szego-kernel Hefer decomposition ----------------------------------------


def hefer_via_szego(phi: MixedPoly, w, z, radial: int = 32, angular: int = 48) -> dict:
    """Global Hefer coefficients on the unit ball through the Szego kernel:

        p_j(w, z) = integral over |zeta| = 1 of phi times the e_j-component
        of sum_{k=1}^n theta ^ ((i/2pi) P)^(n-1) ^ conj(zeta).e
                    / ( (2 pi i) D_w^k D_z^{n-k+1} ),

    with theta = sum conj(zeta_j) dzeta_j, P = sum dzeta_k ^ dzetabar_k and
    D_w = 1 - conj(zeta).w.  The tuple satisfies

        sum_j p_j(w, z) (z_j - w_j) = phi(z) - phi(w)

    for w, z interior; the k-sum telescopes the two Cauchy-Fantappie-Leray
    poles against each other, which is what produces the difference.
    """
    n = phi.dim
    if not phi.is_holomorphic():
        raise ProblemError("/phi/0", "phi must be holomorphic")
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    rule = make_rule("sphere", n, rho=1.0, radial=radial, angular=angular)
    zeta = rule.nodes
    zb = np.conj(zeta)
    dims = (n, n, 1)
    Dw = 1.0 - zb @ w
    Dz = 1.0 - zb @ z
    ebar = ExtElem(dims, {((eframe(j),), ()): zb[..., j - 1] for j in range(1, n + 1)})
    theta = ExtElem(dims, {((holo(j),), ()): zb[..., j - 1] for j in range(1, n + 1)})
    P = ExtElem.zero(dims)
    for k in range(1, n + 1):
        P = P + ExtElem.monomial(dims, (holo(k), anti(k)))
    # ebar goes last: density components are read with the frame as a suffix
    core = theta.wedge(P.wedge_power(n - 1)).wedge(ebar).scale((1j / (2 * np.pi)) ** (n - 1))
    pole = sum(Dw ** -float(k) * Dz ** -float(n - k + 1) for k in range(1, n + 1))
    elem = core.scale(pole * phi.eval(zeta) / TWO_PI_I)
    dens = elem.boundary_density(zeta)
    p = np.zeros(n, dtype=complex)
    for j in range(1, n + 1):
        coeff = dens.get(((eframe(j),), ()))
        if coeff is not None:
            p[j - 1] = integrate(rule, coeff)
    lhs = complex(p @ (z - w))
    rhs = complex(phi.eval(z) - phi.eval(w))
    return {"p": p, "lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}


# ---- residue-based ideal membership ------------------------------------------


def _as_matrix(f) -> HoloMatrix:
    if isinstance(f, HoloMatrix):
        return f
    if f and isinstance(f[0], MixedPoly):
        return HoloMatrix.from_row(list(f))
    return HoloMatrix(f)


def _rand_holo(rng, n: int, degree: int) -> MixedPoly:
    acc = MixedPoly.zero(n)
    for a in product(range(degree + 1), repeat=n):
        if sum(a) > degree:
            continue
        c = complex(rng.standard_normal(), rng.standard_normal())
        mono = MixedPoly.const(n, c)
        for j in range(n):
            for _ in range(a[j]):
                mono = mono * MixedPoly.variable(n, j + 1)
        acc = acc + mono
    return acc


@dataclass
class MembershipReport:
    verdict: str        # "in" | "out" | "inconclusive"
    theta: float
    scale: float
    rows: list[dict]
    params: dict

    def to_obj(self) -> dict:
        return {"convention": CONVENTION_VERSION, "verdict": self.verdict,
                "theta": self.theta, "scale": self.scale, "rows": self.rows,
                "params": self.params}


def membership_test(f, phi, *, battery: int = 8, theta: float = 0.05,
                    degree: int = 2, seed: int = 0, rule: QuadRule | None = None,
                    eps_list=None, family: str = "hs",
                    cutoff: tuple[float, float] = (0.7, 0.9),
                    phi_ref: MixedPoly | None = None) -> MembershipReport:
    """Residue test of phi against the (Briancon-Skoda closure of the) ideal
    generated by f: members annihilate the residue current, so every pairing
    against a battery of random holomorphic test forms must vanish.

    The scale of a "clearly nonzero" pairing is calibrated by running the
    same battery on a reference non-member (the constant 1; any f with a
    zero inside the test region keeps constants out of the ideal).  Verdicts:
    "out" when some normalized pairing clears theta * scale beyond its error
    bar, "in" when all are below it including error bars, "inconclusive"
    otherwise.  Both pairings scale the same way under f -> c f and the
    phi-norm is divided out, so the verdict is scale-invariant.
    """
    hm = _as_matrix(f)
    n, r = hm.n, hm.r
    phis = list(phi) if isinstance(phi, (list, tuple)) else [phi]
    if len(phis) != r:
        raise ProblemError("/phi", "phi must have r = %d components" % r)
    if battery < 1:
        raise ProblemError("/battery", "battery must be >= 1")
    if rule is None:
        rule = default_residue_rule(n)
    rng = np.random.default_rng(seed)
    tests = [_rand_holo(rng, n, degree) for _ in range(battery)]
    if phi_ref is None:
        phi_ref = MixedPoly.const(n, 1.0)
    refs = [phi_ref] * r if r > 1 else phi_ref
    phinorm = max(max(p.max_abs_coeff() for p in phis), 1e-300)

    def pair(target, test):
        if r == 1:
            return residue_pairing(hm.rows[0], target, test, rule,
                                   eps_list=eps_list, family=family, cutoff=cutoff)
        return residue_pairing_en(hm, target, test, rule,
                                  eps_list=eps_list, cutoff=cutoff)

    rows = []
    scale = 0.0
    for b, test in enumerate(tests):
        ref_val, ref_err, _ = pair(refs if r > 1 else phi_ref, test)
        scale = max(scale, abs(ref_val))
        val, err, _ = pair(phis if r > 1 else phis[0], test)
        rows.append({"test": b, "value": _c2(val), "err": float(err),
                     "ref": _c2(ref_val), "ref_err": float(ref_err)})
    scale = max(scale, 1e-300)
    gate = theta * scale
    hard_out = False
    hard_in = True
    for row in rows:
        mag = abs(complex(*row["value"])) / phinorm
        err = row["err"] / phinorm
        row["ratio"] = mag / scale
        if mag - err > gate:
            hard_out = True
        if mag + err >= gate:
            hard_in = False
    verdict = "out" if hard_out else ("in" if hard_in else "inconclusive")
    return MembershipReport(verdict=verdict, theta=theta, scale=float(scale),
                            rows=rows,
                            params={"battery": battery, "degree": degree,
                                    "seed": seed, "family": family,
                                    "cutoff": list(cutoff)})


@dataclass
class ObstructionTable:
    rows: list[dict]
    params: dict

    def to_obj(self) -> dict:
        return {"convention": CONVENTION_VERSION, "rows": self.rows,
                "params": self.params}


def smooth_obstruction(f, phi, *, max_order: int = 2, alphas=None,
                       test: MixedPoly | None = None, rule: QuadRule | None = None,
                       eps_list=None, family: str = "hs",
                       cutoff: tuple[float, float] = (0.7, 0.9)) -> ObstructionTable:
    """Tabulate the residue pairings of the antiholomorphic derivatives of a
    smooth (polynomial in zeta and conj(zeta)) phi.

    For the division equation with smooth data the obstruction is not a
    single number: every dbar^alpha phi paired against the residue current
    enters.  This only reports the table; it renders no verdict.
    """
    hm = _as_matrix(f)
    n, r = hm.n, hm.r
    phis = list(phi) if isinstance(phi, (list, tuple)) else [phi]
    if len(phis) != r:
        raise ProblemError("/phi", "phi must have r = %d components" % r)
    for i, p in enumerate(phis):
        if p.dim != n:
            raise ProblemError("/phi/%d" % i, "dimension %d, expected %d" % (p.dim, n))
    if rule is None:
        rule = default_residue_rule(n)
    if test is None:
        test = MixedPoly.const(n, 1.0)
    if alphas is None:
        alphas = sorted((a for a in product(range(max_order + 1), repeat=n)
                         if sum(a) <= max_order), key=lambda a: (sum(a), a))
    rows = []
    for alpha in alphas:
        da = [p.dbar(tuple(alpha)) for p in phis]
        if all(d.is_zero() for d in da):
            rows.append({"alpha": list(alpha), "value": _c2(0.0), "err": 0.0})
            continue
        if r == 1:
            val, err, _ = residue_pairing(hm.rows[0], da[0], test, rule,
                                          eps_list=eps_list, family=family,
                                          cutoff=cutoff)
        else:
            val, err, _ = residue_pairing_en(hm, da, test, rule,
                                             eps_list=eps_list, cutoff=cutoff)
        rows.append({"alpha": list(alpha), "value": _c2(val), "err": float(err)})
    return ObstructionTable(rows=rows, params={"family": family, "test": test.to_obj(),
                                               "cutoff": list(cutoff)})
