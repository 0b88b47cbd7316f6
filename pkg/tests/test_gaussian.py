import math

import numpy as np
import pytest

from cvmdi import (
    GaussianState,
    InvalidParameterError,
    NumericDomainError,
    TwoModeCov,
    apply_beamsplitter,
    epr_state,
    g_func,
    heterodyne_condition,
    homodyne_condition,
    linear_feedforward,
    partial_trace,
    symplectic_eigenvalues,
    symplectic_form,
    tensor,
    thermal_state,
    two_mode_symplectic,
    vacuum_state,
    von_neumann_entropy,
)
from helpers import c_edge

SZ = np.diag([1.0, -1.0])

# extended-precision reference values
G_HALF = 1.3774437510817343
LAM31_1 = 2.79128784747792
LAM31_2 = 1.79128784747792


def random_pure_two_mode(rng, vmax=50.0):
    v = math.exp(rng.uniform(0.0, math.log(vmax)))
    return apply_beamsplitter(epr_state(v), 0, 1, rng.uniform(0.1, 0.9))


# ---------------------------------------------------------------- constructors

def test_epr_vacuum_limit():
    np.testing.assert_allclose(epr_state(1.0).cov, np.eye(4))


def test_epr_v2_blocks():
    st = epr_state(2.0)
    s3 = math.sqrt(3.0)
    np.testing.assert_allclose(st.cov[:2, :2], 2.0 * np.eye(2))
    np.testing.assert_allclose(st.cov[2:, 2:], 2.0 * np.eye(2))
    np.testing.assert_allclose(st.cov[:2, 2:], s3 * SZ)
    assert st.mean.tolist() == [0.0] * 4


def test_epr_realistic_variance_is_pure():
    lams = symplectic_eigenvalues(epr_state(5.04))
    np.testing.assert_allclose(lams, [1.0, 1.0], atol=1e-12)


def test_epr_rejects_subunity_variance():
    with pytest.raises(InvalidParameterError):
        epr_state(0.99)


def test_thermal_examples():
    np.testing.assert_allclose(thermal_state(1.0).cov, np.eye(2))
    # detector ancilla for eta=0.9, v_el=0.015
    v = 1.0 + 0.015 / (1.0 - 0.9)
    np.testing.assert_allclose(thermal_state(v).cov, 1.15 * np.eye(2))
    np.testing.assert_allclose(symplectic_eigenvalues(thermal_state(2.0)), [2.0])
    with pytest.raises(InvalidParameterError):
        thermal_state(0.5)


def test_state_validation():
    with pytest.raises(InvalidParameterError):
        GaussianState(np.array([[1.0, 0.5], [0.4, 1.0]]))  # asymmetric
    with pytest.raises(InvalidParameterError):
        GaussianState(np.eye(3))  # odd dimension
    with pytest.raises(InvalidParameterError):
        GaussianState(np.eye(2), mean=np.zeros(4))
    st = vacuum_state(1)
    with pytest.raises(ValueError):
        st.cov[0, 0] = 5.0  # frozen array


# --------------------------------------------------------------- beamsplitter

def test_beamsplitter_identity_transmissivity():
    st = epr_state(2.0)
    out = apply_beamsplitter(st, 0, 1, 1.0)
    np.testing.assert_allclose(out.cov, st.cov, atol=1e-14)


def test_beamsplitter_preserves_vacuum():
    out = apply_beamsplitter(vacuum_state(2), 0, 1, 0.5)
    np.testing.assert_allclose(out.cov, np.eye(4), atol=1e-14)


def test_beamsplitter_epr_with_vacuum():
    st = tensor(epr_state(2.0), vacuum_state(1))
    out = apply_beamsplitter(st, 0, 2, 0.5)
    assert out.cov[0, 0] == pytest.approx(1.5)  # (2 + 1) / 2


def test_beamsplitter_matches_dense_oracle():
    rng = np.random.default_rng(3)
    st = tensor(epr_state(3.0), thermal_state(2.0))
    t = 0.37
    s = np.eye(6)
    rt, rr = math.sqrt(t), math.sqrt(1 - t)
    for q in range(2):
        s[0 + q, 0 + q] = rt
        s[0 + q, 4 + q] = rr
        s[4 + q, 0 + q] = -rr
        s[4 + q, 4 + q] = rt
    expect = s @ st.cov @ s.T
    out = apply_beamsplitter(st, 0, 2, t)
    np.testing.assert_allclose(out.cov, expect, atol=1e-13)
    del rng


def test_beamsplitter_argument_errors():
    st = vacuum_state(2)
    with pytest.raises(InvalidParameterError):
        apply_beamsplitter(st, 0, 1, 1.2)
    with pytest.raises(InvalidParameterError):
        apply_beamsplitter(st, 1, 1, 0.5)
    with pytest.raises(InvalidParameterError):
        apply_beamsplitter(st, 0, 5, 0.5)


# -------------------------------------------------------- tensor, partial trace

def test_tensor_vacua():
    np.testing.assert_allclose(tensor(vacuum_state(1), vacuum_state(1)).cov, np.eye(4))


def test_tensor_block_assembly():
    st = tensor(epr_state(2.0), thermal_state(3.0))
    assert st.n_modes == 3
    expect = np.zeros((6, 6))
    expect[:4, :4] = epr_state(2.0).cov
    expect[4:, 4:] = 3.0 * np.eye(2)
    np.testing.assert_allclose(st.cov, expect)


def test_tensor_with_empty_state():
    empty = GaussianState(np.zeros((0, 0)))
    st = epr_state(2.0)
    np.testing.assert_allclose(tensor(empty, st).cov, st.cov)
    np.testing.assert_allclose(tensor(st, empty).cov, st.cov)


def test_partial_trace_keep_all_is_identity():
    st = epr_state(2.0)
    np.testing.assert_allclose(partial_trace(st, [0, 1]).cov, st.cov)


def test_partial_trace_epr_marginal_is_thermal():
    st = partial_trace(epr_state(4.2), [0])
    np.testing.assert_allclose(st.cov, 4.2 * np.eye(2))


def test_partial_trace_reorders_with_sign_structure():
    st = epr_state(2.0)
    swapped = partial_trace(st, [1, 0])
    perm = np.zeros((4, 4))
    perm[0, 2] = perm[1, 3] = perm[2, 0] = perm[3, 1] = 1.0
    np.testing.assert_allclose(swapped.cov, perm @ st.cov @ perm.T)
    # sigma_z correlation signs survive the swap
    assert swapped.cov[0, 2] > 0 and swapped.cov[1, 3] < 0


def test_partial_trace_roundtrip_recovers_factor():
    a, b = epr_state(2.5), thermal_state(1.7)
    joint = tensor(a, b)
    np.testing.assert_allclose(partial_trace(joint, [0, 1]).cov, a.cov)
    np.testing.assert_allclose(partial_trace(joint, [2]).cov, b.cov)


def test_partial_trace_index_errors():
    with pytest.raises(InvalidParameterError):
        partial_trace(epr_state(2.0), [0, 2])
    with pytest.raises(InvalidParameterError):
        partial_trace(epr_state(2.0), [0, 0])


# ---------------------------------------------------------------- conditioning

def test_homodyne_product_state_untouched():
    st = tensor(thermal_state(3.0), thermal_state(2.0))
    out = homodyne_condition(st, 1, "x")
    np.testing.assert_allclose(out.cov, 3.0 * np.eye(2))


def test_homodyne_epr_example():
    out = homodyne_condition(epr_state(2.0), 1, "x")
    np.testing.assert_allclose(out.cov, np.diag([0.5, 2.0]), atol=1e-14)
    out_p = homodyne_condition(epr_state(2.0), 1, "p")
    np.testing.assert_allclose(out_p.cov, np.diag([2.0, 0.5]), atol=1e-14)


def test_homodyne_matches_pseudoinverse_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        st = random_pure_two_mode(rng)
        st = tensor(st, thermal_state(rng.uniform(1.0, 4.0)))
        mode = int(rng.integers(0, 3))
        quad = "x" if rng.uniform() < 0.5 else "p"
        got = homodyne_condition(st, mode, quad)
        proj = np.diag([1.0, 0.0]) if quad == "x" else np.diag([0.0, 1.0])
        keep = [m for m in range(3) if m != mode]
        ki = [2 * m + q for m in keep for q in (0, 1)]
        mi = [2 * mode, 2 * mode + 1]
        gk = st.cov[np.ix_(ki, ki)]
        gm = st.cov[np.ix_(mi, mi)]
        sig = st.cov[np.ix_(mi, ki)]
        expect = gk - sig.T @ np.linalg.pinv(proj @ gm @ proj) @ sig
        np.testing.assert_allclose(got.cov, expect, atol=1e-11)


def test_homodyne_pure_state_stays_pure():
    rng = np.random.default_rng(5)
    for _ in range(20):
        st = random_pure_two_mode(rng)
        out = homodyne_condition(st, 1, "x")
        np.testing.assert_allclose(symplectic_eigenvalues(out), [1.0], atol=1e-9)


def test_heterodyne_product_state_untouched():
    st = tensor(thermal_state(3.0), thermal_state(2.0))
    out = heterodyne_condition(st, 1)
    np.testing.assert_allclose(out.cov, 3.0 * np.eye(2))


def test_heterodyne_epr_example():
    out = heterodyne_condition(epr_state(2.0), 1)
    np.testing.assert_allclose(out.cov, np.eye(2), atol=1e-14)


def test_heterodyne_matches_inverse_oracle_at_large_variance():
    v = 1e5
    st = epr_state(v)
    out = heterodyne_condition(st, 1)
    sig = st.cov[2:, :2]
    expect = st.cov[:2, :2] - sig.T @ np.linalg.inv(st.cov[2:, 2:] + np.eye(2)) @ sig
    # both routes cancel ~1e10 down to ~1, so compare absolutely near eps * v^2 / v
    np.testing.assert_allclose(out.cov, expect, atol=1e-9)
    assert out.cov[0, 0] == pytest.approx(v - (v * v - 1) / (v + 1), abs=1e-9)


def test_heterodyne_pure_state_stays_pure():
    rng = np.random.default_rng(8)
    for _ in range(20):
        st = random_pure_two_mode(rng)
        out = heterodyne_condition(st, 0)
        np.testing.assert_allclose(symplectic_eigenvalues(out), [1.0], atol=1e-9)


def test_conditioning_needs_two_modes():
    with pytest.raises(InvalidParameterError):
        homodyne_condition(thermal_state(2.0), 0, "x")


# ------------------------------------------------------------- linear feedforward

def test_feedforward_identity():
    st = epr_state(2.0)
    out = linear_feedforward(st, np.eye(4))
    np.testing.assert_allclose(out.cov, st.cov)


def test_feedforward_zero_gain_equals_partial_trace():
    st = tensor(epr_state(2.0), thermal_state(3.0))
    m = np.zeros((2, 6))
    m[0, 0] = m[1, 1] = 1.0
    out = linear_feedforward(st, m)
    np.testing.assert_allclose(out.cov, partial_trace(st, [0]).cov)


def test_feedforward_dense_oracle():
    rng = np.random.default_rng(17)
    st = tensor(epr_state(2.0), epr_state(3.0))
    g = 1.0
    m = np.zeros((4, 8), dtype=float)
    m[0, 0] = m[1, 1] = 1.0
    m[2, 4] = 1.0
    m[2, 2] = g
    m[3, 5] = 1.0
    m[3, 7] = g
    out = linear_feedforward(st, m)
    np.testing.assert_allclose(out.cov, m @ st.cov @ m.T, atol=1e-13)
    del rng


def test_feedforward_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        linear_feedforward(epr_state(2.0), np.zeros((2, 6)))
    with pytest.raises(InvalidParameterError):
        linear_feedforward(epr_state(2.0), np.zeros((3, 4)))


# ------------------------------------------------------------ symplectic spectra

def test_spectrum_vacuum_and_thermal():
    np.testing.assert_allclose(symplectic_eigenvalues(vacuum_state(3)), [1.0] * 3)
    np.testing.assert_allclose(symplectic_eigenvalues(thermal_state(2.0)), [2.0])


def test_two_mode_symplectic_examples():
    assert two_mode_symplectic(2.0, 2.0, 0.0) == pytest.approx((2.0, 2.0))
    l1, l2 = two_mode_symplectic(2.0, 2.0, math.sqrt(3.0))
    assert (l1, l2) == pytest.approx((1.0, 1.0), abs=1e-12)
    l1, l2 = two_mode_symplectic(3.0, 2.0, 1.0)
    assert l1 == pytest.approx(LAM31_1, rel=1e-14)
    assert l2 == pytest.approx(LAM31_2, rel=1e-14)
    assert l1 * l2 == pytest.approx(5.0, rel=1e-14)  # product equals ab - c^2


def test_two_mode_symplectic_rejects_unphysical():
    with pytest.raises(NumericDomainError):
        two_mode_symplectic(10.0, 1.0, 2.0)


def test_two_mode_oracle_equivalence_randomized():
    """Closed-form pair vs generic spectrum of the assembled 4x4 matrix."""
    rng = np.random.default_rng(1234)
    for trial in range(1000):
        vmax = 1e5 if trial % 4 == 0 else 50.0
        a = math.exp(rng.uniform(0.0, math.log(vmax)))
        b = math.exp(rng.uniform(0.0, math.log(vmax)))
        t = rng.uniform(0.0, 0.999)
        if trial % 10 == 0:
            a = b = 1e5  # stress: large balanced variances
        c = t * c_edge(a, b)
        l1, l2 = two_mode_symplectic(a, b, c)
        lams = symplectic_eigenvalues(TwoModeCov(a, b, c).as_state())
        np.testing.assert_allclose(lams, [l1, l2], rtol=1e-9)


def test_spectrum_det_identity():
    rng = np.random.default_rng(99)
    for _ in range(50):
        a = math.exp(rng.uniform(0.0, math.log(50.0)))
        b = math.exp(rng.uniform(0.0, math.log(50.0)))
        c = rng.uniform(0.0, 0.99) * c_edge(a, b)
        st = TwoModeCov(a, b, c).as_state()
        lams = symplectic_eigenvalues(st)
        det = np.linalg.det(st.cov)
        assert np.prod(lams ** 2) == pytest.approx(det, rel=1e-6)


def test_purity_preserved_by_passive_optics():
    rng = np.random.default_rng(21)
    for _ in range(20):
        v = math.exp(rng.uniform(0.0, math.log(1000.0)))
        st = tensor(epr_state(v), vacuum_state(1))
        st = apply_beamsplitter(st, 0, 2, rng.uniform(0.05, 0.95))
        st = apply_beamsplitter(st, 1, 2, rng.uniform(0.05, 0.95))
        lams = symplectic_eigenvalues(st)
        np.testing.assert_allclose(lams, np.ones(3), atol=1e-9)


def test_symplectic_form_shape():
    om = symplectic_form(2)
    assert om.shape == (4, 4)
    np.testing.assert_allclose(om @ om, -np.eye(4))


# ------------------------------------------------------------------- entropies

def test_g_func_values():
    assert g_func(0.0) == 0.0
    assert g_func(1.0) == pytest.approx(2.0, rel=1e-15)
    assert g_func(0.5) == pytest.approx(G_HALF, rel=1e-15)
    with pytest.raises(InvalidParameterError):
        g_func(-1e-12)


def test_g_func_large_argument_accuracy():
    # references computed at 40-digit precision
    refs = {1e4: 14.73047955278608572957,
            1e6: 21.37426433156041749001,
            1e9: 31.3400478955965720584,
            1e12: 41.30583217953803292932}
    for x, ref in refs.items():
        assert abs(g_func(x) - ref) < 1e-12


def test_entropy_pure_states():
    assert von_neumann_entropy(epr_state(2.0)) == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(vacuum_state(2)) == 0.0


def test_entropy_thermal():
    assert von_neumann_entropy(thermal_state(3.0)) == pytest.approx(2.0, rel=1e-14)
    marg = partial_trace(epr_state(2.0), [0])
    assert von_neumann_entropy(marg) == pytest.approx(G_HALF, rel=1e-14)


def test_physicality_check_flags_bad_matrix():
    st = GaussianState(0.5 * np.eye(2))
    with pytest.raises(NumericDomainError):
        st.require_physical()
