import numpy as np
import pytest

from superrad.domains import (
    DomainDecomposition,
    domain_boundaries,
    slice_stack_from_domains,
    spatial_profiles,
)
from superrad.errors import DomainError
from superrad.propagation import coherence_depth
from superrad.specfun import j1_zero

ZEROS_BT = np.array([(j1_zero(k) / 2) ** 2 for k in (1, 2, 3)])


@pytest.fixture(scope="module")
def fig1_boundaries():
    return domain_boundaries(30.0, 1e-4, 1.0)


def test_boundaries_near_lossless_limit(fig1_boundaries):
    np.testing.assert_allclose(fig1_boundaries.boundaries_bt, [3.6705, 12.3046, 25.8750], rtol=5e-5)
    np.testing.assert_allclose(fig1_boundaries.boundaries_bt, [3.6705, 12.3046, 25.8781], rtol=1e-3)


def test_slice_widths(fig1_boundaries):
    np.testing.assert_allclose(fig1_boundaries.slice_bt, [3.67, 8.63, 13.57], atol=6e-3)


def test_thin_absorber_has_no_boundary():
    dec = domain_boundaries(2.0, 1e-4, 1.0)
    assert len(dec) == 0
    assert dec.slice_bt.size == 0


@pytest.mark.parametrize("t_p", [0.1, 1.0, 37.0])
def test_scale_invariance(t_p):
    # boundaries in b t_p units depend only on gamma t_p
    ref = domain_boundaries(30.0, 1e-2, 1.0).boundaries_bt
    got = domain_boundaries(30.0 / t_p, 1e-2 / t_p, t_p).boundaries_bt
    np.testing.assert_allclose(got, ref, rtol=1e-9)


@pytest.mark.parametrize("gamma_tp", [0.0, 1e-6, 1e-5, 1e-4])
def test_close_to_j1_zeros_for_small_decay(gamma_tp):
    got = domain_boundaries(30.0, gamma_tp, 1.0).boundaries_bt
    np.testing.assert_allclose(got, ZEROS_BT, rtol=1e-4)


@pytest.mark.parametrize("gamma_tp", [1e-4, 3e-4, 1e-3, 1e-2])
def test_boundary_drift_is_linear_in_decay(gamma_tp):
    # each zero moves outward by about gamma t_p in b t_p units
    got = domain_boundaries(30.0, gamma_tp, 1.0).boundaries_bt
    drift = got / ZEROS_BT - 1
    assert np.all(drift > 0)
    assert np.all(drift < 0.3 * gamma_tp)


def test_constant_sign_within_domains(fig1_boundaries):
    edges = np.concatenate([[0.0], fig1_boundaries.boundaries_bt, [30.0]])
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        nodes = np.linspace(lo, hi, 102)[1:-1]
        vals = coherence_depth(nodes, 1e-4, 1.0)
        expected = 1 if k % 2 == 0 else -1
        assert np.all(np.sign(vals) == expected)


def test_profiles_normalized_at_front_face():
    prof = spatial_profiles(30.0, 1e-4, 1.0, 1024)
    assert prof.field[0] == pytest.approx(1.0, abs=1e-15)
    assert np.argmax(np.abs(prof.field)) == 0
    assert np.argmax(np.abs(prof.im_coherence)) == 0
    assert prof.im_coherence[0] == pytest.approx(-np.expm1(-1e-4) / 1e-4, rel=1e-14)
    np.testing.assert_allclose(prof.depth_bt, prof.depth)
    assert np.all(np.diff(prof.depth) > 0)


def test_field_extrema_at_coherence_zeros(fig1_boundaries):
    prof = spatial_profiles(30.0, 1e-4, 1.0, 4096)
    d = np.diff(prof.field)
    turning = np.nonzero(np.sign(d[1:]) != np.sign(d[:-1]))[0] + 1
    spacing = prof.depth_bt[1] - prof.depth_bt[0]
    np.testing.assert_allclose(prof.depth_bt[turning], fig1_boundaries.boundaries_bt, atol=spacing)


def test_profile_validation():
    with pytest.raises(DomainError):
        spatial_profiles(30.0, 1e-4, 1.0, 10)
    with pytest.raises(DomainError):
        spatial_profiles(-1.0, 1e-4, 1.0)
    with pytest.raises(DomainError):
        domain_boundaries(30.0, 1e-4, 0.0)


def test_stack_from_one_boundary():
    dec = DomainDecomposition(np.array([3.67]), np.array([3.67]), 1.0)
    stack = slice_stack_from_domains(dec, 3.67)
    assert stack.slice_b == (3.67,)
    assert not stack.incomplete


def test_stack_from_two_boundaries():
    t_p = 2.0
    dec = DomainDecomposition(np.array([3.67, 12.3]), np.array([3.67, 8.63]), t_p)
    stack = slice_stack_from_domains(dec, 12.3 / t_p)
    np.testing.assert_allclose(stack.slice_b, [3.67 / t_p, 8.63 / t_p])
    assert stack.t_p == t_p


def test_stack_with_remainder(fig1_boundaries):
    stack = slice_stack_from_domains(fig1_boundaries, 30.0, gamma=1e-4)
    assert stack.n_slices == 4
    assert stack.incomplete
    assert stack.slice_b[-1] == pytest.approx(4.13, abs=6e-3)
    assert stack.b_total == pytest.approx(30.0)


def test_stack_from_empty_decomposition():
    with pytest.raises(DomainError):
        slice_stack_from_domains(domain_boundaries(2.0, 1e-4, 1.0), 2.0)


@pytest.mark.xfail(strict=True, reason="the first zero sits 2.7e-4 (relative) out at gamma t_p = 1e-3")
def test_j1_zero_match_at_upper_decay():
    got = domain_boundaries(30.0, 1e-3, 1.0).boundaries_bt
    np.testing.assert_allclose(got, ZEROS_BT, rtol=1e-4)
