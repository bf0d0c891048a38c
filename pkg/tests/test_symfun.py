import math

import numpy as np
import pytest

from hflow import symfun as sf
from hflow.errors import ConeViolation, InvalidInput


RNG = np.random.default_rng(20250809)


def fd_gradient(fun, x, h=1e-6):
    """Central-difference gradient oracle."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        out[i] = (fun(x + e) - fun(x - e)) / (2 * e[i])
    return out


# ---------------------------------------------------------------------------
# elementary symmetric functions
# ---------------------------------------------------------------------------


def test_all_ones_normalization():
    for n in range(1, 9):
        p = sf.eval_elementary(np.ones(n))
        assert np.allclose(p.e, 1.0, rtol=0, atol=1e-15)
        assert p.cone_index == n


def test_recurrence_matches_enumeration_oracle():
    # subset-sum enumeration is the independent oracle for n <= 8
    for n in range(1, 9):
        for _ in range(20):
            kappa = RNG.uniform(-2.0, 4.0, size=n)
            p = sf.eval_elementary(kappa)
            for k in range(n + 1):
                exact = sf.subset_sum_elementary(kappa, k)
                assert abs(p.e[k] - exact) <= 1e-12 * max(1.0, abs(exact))


def test_fixed_values_123():
    # frozen from the enumeration oracle: E_1 = 2, E_2 = 11/3, E_3 = 6
    p = sf.eval_elementary([1.0, 2.0, 3.0])
    assert p.e[1] == pytest.approx(2.0, abs=1e-14)
    assert p.e[2] == pytest.approx(11.0 / 3.0, abs=1e-14)
    assert p.e[3] == pytest.approx(sf.subset_sum_elementary([1.0, 2.0, 3.0], 3), abs=1e-14)
    assert p.e[3] == pytest.approx(6.0, abs=1e-14)


def test_product_identity_n2():
    for t in (0.1, 0.5, 1.0, 3.0, 17.0):
        p = sf.eval_elementary([t, 1.0 / t])
        assert p.e[2] == pytest.approx(1.0, rel=1e-14)


def test_gradient_matches_fd():
    for n in (2, 3, 5):
        for _ in range(5):
            kappa = RNG.uniform(0.1, 10.0, size=n)
            p = sf.eval_elementary(kappa)
            for k in range(1, n + 1):
                grad = p.grad_e[k]
                ref = fd_gradient(lambda x, k=k: sf.eval_elementary(x).e[k], kappa)
                scale = np.maximum(np.abs(ref), 1e-8)
                assert np.max(np.abs(grad - ref) / scale) < 1e-6


def test_non_finite_input_rejected():
    with pytest.raises(InvalidInput):
        sf.eval_elementary([1.0, np.nan])
    with pytest.raises(InvalidInput):
        sf.eval_elementary([np.inf, 1.0])
    with pytest.raises(InvalidInput):
        sf.eval_elementary(np.zeros((2, 2)))


def test_cone_index_examples():
    assert sf.eval_elementary([1.0, 1.0, 1.0]).cone_index == 3
    assert sf.eval_elementary([-1.0, -2.0]).cone_index == 0
    # E_1 > 0 but E_2 < 0: Gamma_1 only
    p = sf.eval_elementary([5.0, -1.0])
    assert p.e[1] > 0 > p.e[2]
    assert p.cone_index == 1


# ---------------------------------------------------------------------------
# Newton identities and Newton-MacLaurin margins
# ---------------------------------------------------------------------------


def test_newton_identities_symmetric_point():
    p = sf.eval_elementary(np.full(4, 1.7))
    for k in range(1, 5):
        assert np.max(np.abs(sf.newton_identities(p, k))) < 1e-14


def test_newton_identities_123():
    p = sf.eval_elementary([1.0, 2.0, 3.0])
    assert np.max(np.abs(sf.newton_identities(p, 2))) < 1e-12


def test_newton_identities_random_all_k():
    for n in (2, 3, 4, 6, 8):
        for _ in range(50):
            kappa = RNG.uniform(0.05, 5.0, size=n)
            p = sf.eval_elementary(kappa)
            for k in range(1, n + 1):
                res = sf.newton_identities(p, k)
                assert np.max(np.abs(res)) < 1e-10 * (1.0 + abs(p.e[k]))


def test_nm_margin_equal_entries_zero():
    for c in (0.2, 1.0, 4.0):
        p = sf.eval_elementary(np.full(5, c))
        for k in range(1, 5):
            assert abs(sf.newton_maclaurin_margin(p, k)) < 1e-13 * max(1.0, c**10)


def test_nm_margin_123():
    p = sf.eval_elementary([1.0, 2.0, 3.0])
    assert sf.newton_maclaurin_margin(p, 1) == pytest.approx(4.0 - 11.0 / 3.0, abs=1e-13)


def test_nm_margin_out_of_range():
    p = sf.eval_elementary([1.0, 2.0, 3.0])
    with pytest.raises(InvalidInput):
        sf.newton_maclaurin_margin(p, 3)
    with pytest.raises(InvalidInput):
        sf.newton_maclaurin_margin(p, 0)


def test_nm_margin_nonnegative_property():
    # positive-cone batch plus rejection-sampled Gamma_k points with negatives
    count = 0
    for _ in range(300):
        n = int(RNG.integers(2, 7))
        kappa = RNG.uniform(0.05, 10.0, size=n)
        p = sf.eval_elementary(kappa)
        for k in range(1, n):
            assert sf.newton_maclaurin_margin(p, k) >= 0.0
            count += 1
    for _ in range(500):
        n = int(RNG.integers(2, 5))
        kappa = RNG.uniform(-1.0, 4.0, size=n)
        p = sf.eval_elementary(kappa)
        for k in range(1, min(p.cone_index + 1, n)):
            assert sf.newton_maclaurin_margin(p, k) >= 0.0
            count += 1
    assert count > 500


# ---------------------------------------------------------------------------
# speed functions
# ---------------------------------------------------------------------------


def test_speed_normalized_at_ones():
    p = sf.eval_elementary(np.ones(4))
    for k, l in ((1, 0), (2, 0), (2, 1), (4, 0), (4, 3)):
        F, _ = sf.eval_speed(sf.SpeedFunctionSpec.quotient(k, l), p)
        assert F == pytest.approx(1.0, abs=1e-14)


def test_speed_harmonic_mean_closed_form():
    # n = 2 quotient(2,1): F = 2ab/(a+b)
    for _ in range(20):
        a, b = RNG.uniform(0.1, 5.0, size=2)
        p = sf.eval_elementary([a, b])
        F, dF = sf.eval_speed(sf.SpeedFunctionSpec.quotient(2, 1), p)
        assert F == pytest.approx(2 * a * b / (a + b), rel=1e-13)
        ref = fd_gradient(lambda x: 2 * x[0] * x[1] / (x[0] + x[1]), np.array([a, b]))
        assert np.allclose(dF, ref, rtol=1e-6, atol=1e-9)


def test_speed_homogeneity():
    for _ in range(20):
        n = int(RNG.integers(2, 7))
        kappa = RNG.uniform(0.1, 5.0, size=n)
        spec = sf.SpeedFunctionSpec.quotient(int(RNG.integers(1, n + 1)), 0)
        F1, _ = sf.eval_speed(spec, sf.eval_elementary(kappa))
        F2, _ = sf.eval_speed(spec, sf.eval_elementary(2.0 * kappa))
        assert F2 == pytest.approx(2.0 * F1, rel=1e-12)


def test_speed_monotone_on_positive_cone():
    for _ in range(30):
        n = int(RNG.integers(2, 6))
        kappa = RNG.uniform(0.1, 10.0, size=n)
        p = sf.eval_elementary(kappa)
        for k in range(1, n + 1):
            for l in range(0, k):
                _, dF = sf.eval_speed(sf.SpeedFunctionSpec.quotient(k, l), p)
                assert np.all(dF > 0.0)


def test_speed_cone_violation_carries_index():
    p = sf.eval_elementary([5.0, -1.0])  # Gamma_1 only
    with pytest.raises(ConeViolation) as exc:
        sf.eval_speed(sf.SpeedFunctionSpec.quotient(2, 1), p)
    assert exc.value.cone_index == 1
    assert exc.value.required == 2


def test_speed_spec_validation():
    with pytest.raises(InvalidInput):
        sf.SpeedFunctionSpec.quotient(1, 1)
    with pytest.raises(InvalidInput):
        sf.SpeedFunctionSpec.quotient(0, 0)
    with pytest.raises(InvalidInput):
        sf.SpeedFunctionSpec.mean(phi="power", phi_param=-1.0)
    with pytest.raises(InvalidInput):
        sf.SpeedFunctionSpec.mean(phi="neg_inv_power", phi_param=1.5)
    with pytest.raises(InvalidInput):
        sf.SpeedFunctionSpec.mean(phi="sqrt")
    # admissible families construct fine
    sf.SpeedFunctionSpec.mean(phi="log")
    sf.SpeedFunctionSpec.quotient(2, 0, phi="power", phi_param=2.0)
    sf.SpeedFunctionSpec.quotient(2, 1, phi="neg_inv_power", phi_param=1.0)


# ---------------------------------------------------------------------------
# concavity diagnostics
# ---------------------------------------------------------------------------


def test_concavity_linear_speed_zero_hessian():
    p = sf.eval_elementary([0.5, 1.0, 2.5])
    rep = sf.concavity_diagnostics(sf.SpeedFunctionSpec.mean(), p)
    assert abs(rep.hessian_min_eig) < 1e-8
    assert abs(rep.hessian_max_eig) < 1e-8
    assert rep.inverse_min_eig > -1e-8
    assert rep.degenerate_pairs == 0


@pytest.mark.parametrize("k,l", [(3, 0), (2, 1)])
def test_concavity_quotients(k, l):
    # concave and inverse concave on the positive cone (FD oracle)
    for _ in range(10):
        kappa = np.sort(RNG.uniform(0.3, 3.0, size=3))
        if np.min(np.diff(kappa)) < 1e-2:
            continue
        p = sf.eval_elementary(kappa)
        rep = sf.concavity_diagnostics(sf.SpeedFunctionSpec.quotient(k, l), p)
        assert rep.hessian_max_eig <= 1e-8
        assert rep.inverse_min_eig >= -1e-8
        assert rep.quotient_max <= 1e-8
        assert rep.inverse_combo_min >= -1e-8


def test_concavity_123_quotient21():
    p = sf.eval_elementary([1.0, 2.0, 3.0])
    rep = sf.concavity_diagnostics(sf.SpeedFunctionSpec.quotient(2, 1), p)
    assert rep.hessian_max_eig <= 1e-8
    assert rep.inverse_min_eig >= -1e-8


def test_concavity_degenerate_pairs_flagged():
    p = sf.eval_elementary([1.0, 1.0, 2.0])
    rep = sf.concavity_diagnostics(sf.SpeedFunctionSpec.quotient(3, 0), p)
    assert rep.degenerate_pairs == 1


def test_concavity_needs_positive_cone():
    p = sf.eval_elementary([1.0, -0.5])
    with pytest.raises(InvalidInput):
        sf.concavity_diagnostics(sf.SpeedFunctionSpec.mean(), p)
