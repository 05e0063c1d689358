"""Regularized currents: exact epsilon-identities, residue calibration
against the Cauchy/monomial oracles, and the determinantal ladder."""

import numpy as np
import pytest

from resdiv.cpoly import MixedPoly
from resdiv.currents import (ENData, HoloMatrix, KoszulData, default_residue_rule,
                             eps_schedule, extrapolate, grothendieck_residue,
                             minimal_inverse, residue_pairing, sigma_values)
from resdiv.exterior import ExtElem, anti, contract, eframe, qframe
from resdiv.hefer import en_differential


# ---- oracles ---------------------------------------------------------------

def cauchy_residue(p: int, q: int) -> float:
    """res of z^q with respect to z^p: the Cauchy integral
    (2 pi i)^{-1} oint z^{q-p} dz picks out exponent -1."""
    return 1.0 if q == p - 1 else 0.0


def separable_residue(f_exps, phi_exps) -> float:
    """Grothendieck residue of a monomial against the row (z_1^{a_1}, ...,
    z_n^{a_n}): the iterated Cauchy integral factors."""
    return float(np.prod([cauchy_residue(a, q) for a, q in zip(f_exps, phi_exps)]))


# ---- helpers ---------------------------------------------------------------

def rand_poly(rng, n, deg=2):
    p = MixedPoly.const(n, complex(rng.standard_normal(), rng.standard_normal()))
    for j in range(1, n + 1):
        v = MixedPoly.variable(n, j)
        acc = v
        for _ in range(deg):
            p = p + acc * complex(rng.standard_normal(), rng.standard_normal())
            acc = acc * v
    return p


def elem_max(e: ExtElem) -> float:
    return max((float(np.max(np.abs(c))) for c in e.terms.values()), default=0.0)


def fd_dbar(build, dims, z, h=1e-6):
    """Central-difference dbar of an ExtElem-valued function of the batch."""
    n = dims[0]
    acc = ExtElem.zero(dims)
    for a in range(n):
        ex = np.zeros(n, dtype=complex); ex[a] = h
        ey = np.zeros(n, dtype=complex); ey[a] = 1j * h
        dx = build(z + ex) - build(z - ex)
        dy = build(z + ey) - build(z - ey)
        d = dx.scale(0.5 / (2 * h)) + dy.scale(0.5j / (2 * h))
        acc = acc + ExtElem.monomial(dims, (anti(a + 1),)).wedge(d)
    return acc


# ---- basic pieces ----------------------------------------------------------

def test_sigma_values_right_inverse():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((40, 2, 3)) + 1j * rng.standard_normal((40, 2, 3))
    sigma, v = sigma_values(F)
    assert np.max(np.abs(F @ sigma - np.eye(2))) < 1e-12
    assert np.all(v > 0)

    F = np.array([[[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]]], dtype=complex)
    with pytest.raises(ValueError):
        sigma_values(F, guard=1e-14)


def test_minimal_inverse_examples():
    # f = (z1) at z = 2: sigma = e1/2, no Q-leg for r = 1
    f1 = HoloMatrix.from_row([MixedPoly.variable(1, 1)])
    s = minimal_inverse(f1, np.array([[2.0 + 0j]]))
    assert set(s.terms) == {((eframe(1),), ())}
    assert abs(s.terms[((eframe(1),), ())][0] - 0.5) < 1e-14

    # f = (z1, z2) at (1, i): sigma = (e1 - i e2)/2
    f2 = HoloMatrix.from_row([MixedPoly.variable(2, 1), MixedPoly.variable(2, 2)])
    s = minimal_inverse(f2, np.array([[1.0, 1j]]))
    assert abs(s.terms[((eframe(1),), ())][0] - 0.5) < 1e-14
    assert abs(s.terms[((eframe(2),), ())][0] + 0.5j) < 1e-14

    # r = 2 square example carries the Q*-leg in the sym slot
    one = MixedPoly.const(2, 1.0)
    hm = HoloMatrix([[one, MixedPoly.variable(2, 1)], [MixedPoly.variable(2, 2), one]])
    rng = np.random.default_rng(1)
    pts = 0.4 * (rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2)))
    s = minimal_inverse(hm, pts)
    F = hm.eval(pts)
    for i in range(1, 3):
        got = np.zeros((6, 2), dtype=complex)
        for j in range(1, 3):
            got[:, j - 1] = s.terms[((eframe(j),), (i,))]
        prod = np.einsum("...kj,...j->...k", F, got)
        want = np.zeros_like(prod)
        want[:, i - 1] = 1.0
        assert np.max(np.abs(prod - want)) < 1e-12
    # singular point trips the guard
    zero_pt = np.zeros((1, 1), dtype=complex)
    with pytest.raises(ValueError):
        minimal_inverse(f1, zero_pt)


def test_eps_schedule():
    s = eps_schedule(0.25, 6)
    assert s[0] == 0.25 ** 2 and s[-1] == 0.25 ** 7
    assert all(a > b for a, b in zip(s, s[1:]))
    with pytest.raises(ValueError):
        eps_schedule(1.5)


def test_extrapolate_geometric():
    L = 0.7 - 0.3j
    vals = [L + 2.0 * (0.25 ** (0.5 * i)) for i in range(6)]
    lim, err = extrapolate(vals)
    assert abs(lim - L) < 1e-9
    assert abs(lim - L) < 10 * err + 1e-12


def test_extrapolate_noncontracting():
    vals = [1.0, 2.0, 3.0]  # differences do not contract
    lim, err = extrapolate(vals)
    assert lim == 3.0 and err > 0.5


def test_holomatrix_roundtrip():
    rng = np.random.default_rng(5)
    rows = [[rand_poly(rng, 2, 1) for _ in range(3)] for _ in range(2)]
    hm = HoloMatrix(rows)
    hm2 = HoloMatrix.from_obj(hm.to_obj())
    pts = rng.standard_normal((7, 2)) + 1j * rng.standard_normal((7, 2))
    assert np.max(np.abs(hm.eval(pts) - hm2.eval(pts))) < 1e-13
    with pytest.raises(ValueError):
        HoloMatrix([[rows[0][0]], [rows[1][0], rows[1][1]]])
    zb = MixedPoly.anti_variable(2, 1)
    with pytest.raises(ValueError):
        HoloMatrix([[zb]])


# ---- the exact identity (delta_f - dbar) U = 1 - R -------------------------

@pytest.mark.parametrize("family,m", [("hs", 2), ("hs", 3), ("cutoff", 2), ("cutoff", 3)])
def test_koszul_identity_at_eps(family, m):
    n = 2
    dims = (n, m, 1)
    rng = np.random.default_rng(3 + m)
    row = [rand_poly(rng, n) for _ in range(m)]
    pts = 0.5 * (rng.standard_normal((6, n)) + 1j * rng.standard_normal((6, n)))
    eps = 0.3
    data = KoszulData(row, pts, family=family)
    U, R = data.currents(eps)
    cov = [(eframe(j + 1), data.F[..., j]) for j in range(m)]

    lhs0 = contract(cov, U[1])
    rhs0 = ExtElem.scalar(dims, np.ones(len(pts), dtype=complex)) - R[0]
    assert elem_max(lhs0 - rhs0) < 1e-13

    for k in range(1, data.kmax_r + 1):
        du = fd_dbar(lambda z, k=k: KoszulData(row, z, family=family).currents(eps)[0][k],
                     dims, pts)
        dfu = contract(cov, U[k + 1]) if (k + 1) in U else ExtElem.zero(dims)
        assert elem_max(dfu - du + R[k]) < 1e-7


def test_koszul_truncation_degrees():
    rng = np.random.default_rng(9)
    n, m = 2, 3
    row = [rand_poly(rng, n, 1) for _ in range(m)]
    pts = 0.5 * (rng.standard_normal((4, n)) + 1j * rng.standard_normal((4, n)))
    data = KoszulData(row, pts, family="hs")
    U, R = data.currents(0.1)
    assert sorted(U) == [1, 2, 3]          # min(m, n+1)
    assert sorted(R) == [0, 1, 2]          # min(m, n)
    # U_k is an E_k-valued (0, k-1)-form
    for k, u in U.items():
        for (g, s), _ in u.terms.items():
            assert sum(1 for x in g if x < 0x200) == k - 1
            assert sum(1 for x in g if 0x200 <= x < 0x300) == k


# ---- residue calibration against the oracles -------------------------------

def test_cauchy_calibration_1d():
    z = MixedPoly.variable(1, 1)
    one = MixedPoly.const(1, 1.0)
    res, err, _ = grothendieck_residue([z], one)
    assert abs(res - cauchy_residue(1, 0)) < 1e-3
    res, err, _ = grothendieck_residue([z * z], z)
    assert abs(res - cauchy_residue(2, 1)) < 5e-3
    res, err, _ = grothendieck_residue([z * z], one)
    assert abs(res - cauchy_residue(2, 0)) < 1e-8


def test_monomial_residues_n2():
    z1 = MixedPoly.variable(2, 1)
    z2 = MixedPoly.variable(2, 2)
    one = MixedPoly.const(2, 1.0)
    rule = default_residue_rule(2, radial=12, angular=16, npanels=5)

    res, err, _ = grothendieck_residue([z1, z2], one, rule=rule)
    assert abs(res - separable_residue((1, 1), (0, 0))) < 2e-3

    res, err, _ = grothendieck_residue([z1 * z1, z2 * z2 * z2], z1 * z2 * z2, rule=rule)
    assert abs(res - separable_residue((2, 3), (1, 2))) < 1e-2

    res, err, _ = grothendieck_residue([z1 * z1, z2], one, rule=rule)
    assert abs(res - separable_residue((2, 1), (0, 0))) < 1e-8


def test_families_agree():
    z1 = MixedPoly.variable(2, 1)
    z2 = MixedPoly.variable(2, 2)
    rule = default_residue_rule(2, radial=12, angular=16, npanels=5)
    phi = z1 * z2 * z2
    row = [z1 * z1, z2 * z2 * z2]
    r_hs, e_hs, _ = grothendieck_residue(row, phi, rule=rule, family="hs")
    r_co, e_co, _ = grothendieck_residue(row, phi, rule=rule, family="cutoff")
    assert abs(r_hs - r_co) < 5e-3


def test_residue_pairing_kills_ideal_member():
    # phi in the ideal annihilates the residue: here phi = z1^2 * z2 for
    # f = (z1^2, z2^2) and a generic holomorphic test factor
    z1 = MixedPoly.variable(2, 1)
    z2 = MixedPoly.variable(2, 2)
    rng = np.random.default_rng(17)
    test = rand_poly(rng, 2, 2)
    rule = default_residue_rule(2, radial=12, angular=16, npanels=5)
    row = [z1 * z1, z2 * z2]
    val_in, err_in, _ = residue_pairing(row, z1 * z1 * z2, test, rule)
    val_out, err_out, _ = residue_pairing(row, z1 * z2, test, rule)
    assert abs(val_in) < 5e-2 * abs(val_out)
    assert abs(val_out) > 1.0  # raw pairing carries (2 pi)^n scale


# ---- determinantal currents -------------------------------------------------

def test_en_square_matrix():
    # f = [[1, z1], [z2, 1]] is invertible off det = 1 - z1 z2; sigma = f^{-1}
    # is then holomorphic, so dbar sigma vanishes identically
    n = 2
    one = MixedPoly.const(n, 1.0)
    z1 = MixedPoly.variable(n, 1)
    z2 = MixedPoly.variable(n, 2)
    hm = HoloMatrix([[one, z1], [z2, one]])
    rng = np.random.default_rng(2)
    pts = 0.5 * (rng.standard_normal((8, n)) + 1j * rng.standard_normal((8, n)))
    data = ENData(hm, pts)
    assert data.length == 1
    assert np.max(np.abs(data.dsig)) < 1e-12
    # v = |det f|^2 is real-valued, so dbar v stays nonzero even here
    eps = 0.2
    U, R, r0 = data.currents(eps)
    assert sorted(U) == [1] and sorted(R) == [1]
    # f U_1 = chi I, so R_0 = (1 - chi) I closes the degree-0 identity
    F = hm.eval(pts)
    chi = data.v / (data.v + eps)
    for i in range(1, 3):
        col = U[1].columns[((qframe(i),), ())]
        acc = np.zeros((len(pts), 2), dtype=complex)
        for (g, s), c in col.terms.items():
            acc[:, g[0] & 0xFF] += c  # only eframe singles here
        got = np.einsum("...ij,...j->...i", F, acc)
        want = np.zeros_like(got)
        want[:, i - 1] = chi
        assert np.max(np.abs(got - want)) < 1e-12
    assert np.max(np.abs(r0 - (1 - chi))) < 1e-14


def test_en_dv_and_dsig_match_fd():
    rng = np.random.default_rng(7)
    n, m, r = 2, 3, 2
    rows = [[rand_poly(rng, n, 1) for _ in range(m)] for _ in range(r)]
    hm = HoloMatrix(rows)
    pts = 0.4 * (rng.standard_normal((5, n)) + 1j * rng.standard_normal((5, n)))
    data = ENData(hm, pts)
    assert np.max(np.abs(hm.eval(pts) @ data.sigma - np.eye(r))) < 1e-12

    h = 1e-6
    def vof(z):
        F = hm.eval(z)
        return np.real(np.linalg.det(F @ np.conj(np.swapaxes(F, -1, -2))))
    def sof(z):
        return sigma_values(hm.eval(z))[0]
    for a in range(n):
        ex = np.zeros(n, dtype=complex); ex[a] = h
        ey = np.zeros(n, dtype=complex); ey[a] = 1j * h
        dv_fd = ((vof(pts + ex) - vof(pts - ex)) + 1j * (vof(pts + ey) - vof(pts - ey))) / (4 * h)
        assert np.max(np.abs(dv_fd - data.dv[..., a])) < 1e-6
        ds_fd = ((sof(pts + ex) - sof(pts - ex)) + 1j * (sof(pts + ey) - sof(pts - ey))) / (4 * h)
        assert np.max(np.abs(ds_fd - data.dsig[..., a, :, :])) < 1e-6


@pytest.mark.parametrize("n,m,level", [(2, 3, 1), (3, 4, 2)])
def test_en_dbar_ladder(n, m, level):
    # dbar u_k = f_{k+1} u_{k+1} off the degeneracy locus, pinning both the
    # wedge order in u_k and the divided-power normalization
    r = 2
    dims = (n, m, r)
    rng = np.random.default_rng(7 + m)
    rows = [[rand_poly(rng, n, 1) for _ in range(m)] for _ in range(r)]
    hm = HoloMatrix(rows)
    pts = 0.35 * (rng.standard_normal((4, n)) + 1j * rng.standard_normal((4, n)))
    data = ENData(hm, pts)
    fk = en_differential(rows, dims, level + 1, at_param=False).eval_at(pts, None)
    for i in range(1, r + 1):
        key = ((qframe(i),), ())
        rhs = fk.apply(data.u_cols[level + 1][key], strict=False)
        lhs = fd_dbar(lambda z, key=key: ENData(hm, z).u_cols[level][key], dims, pts)
        scale = max(elem_max(rhs), 1.0)
        assert elem_max(lhs - rhs) < 1e-6 * scale


def test_en_identity_at_eps():
    # degree-1 closure: f_2 U_2 - dbar U_1 = -R_1 at fixed eps
    n, m, r = 2, 3, 2
    dims = (n, m, r)
    rng = np.random.default_rng(21)
    rows = [[rand_poly(rng, n, 1) for _ in range(m)] for _ in range(r)]
    hm = HoloMatrix(rows)
    pts = 0.4 * (rng.standard_normal((4, n)) + 1j * rng.standard_normal((4, n)))
    eps = 0.25
    data = ENData(hm, pts)
    U, R, _ = data.currents(eps)
    f2 = en_differential(rows, dims, 2, at_param=False).eval_at(pts, None)
    for i in range(1, r + 1):
        key = ((qframe(i),), ())
        dU1 = fd_dbar(lambda z, key=key: ENData(hm, z).currents(eps)[0][1].columns[key],
                      dims, pts)
        resid = f2.apply(U[2].columns[key], strict=False) - dU1 + R[1].columns[key]
        assert elem_max(resid) < 1e-6
