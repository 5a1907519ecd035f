import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import finite_models
from gibbsfisher.ensembles import (
    JointEnsemble,
    conjugate_pair_report,
    ensemble_from_json,
    gce_report,
    gge_report,
)
from gibbsfisher.errors import DegenerateModelError, ModelError
from gibbsfisher.fisher import fisher_report
from gibbsfisher.spectra import TwoLevel


def random_states(rng, k, m):
    charges = rng.normal(size=(k, m)).round(3)
    g = rng.integers(1, 4, size=k)
    return charges, g


def test_single_charge_two_level():
    ens = JointEnsemble(np.array([[0.0], [1.0]]), np.array([1, 1]), np.array([1.0]))
    r = gge_report(ens)
    assert r.F_S == pytest.approx((1 + math.e) ** 2 / math.e, rel=1e-13)
    assert r.F_S == pytest.approx(fisher_report(TwoLevel(1.0), 1.0).F_S, rel=1e-12)
    assert r.F_S * r.C_v_eff == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("name", sorted(finite_models()))
@pytest.mark.parametrize("beta", [0.2, 1.0, 3.0])
def test_single_charge_gge_is_canonical(name, beta):
    spec = finite_models()[name].as_spectrum()
    ens = JointEnsemble(spec.energies[:, None], spec.degeneracies, np.array([beta]))
    assert gge_report(ens).F_S == pytest.approx(fisher_report(spec, beta).F_S, rel=1e-12)


def test_constant_charge_carries_no_information():
    base = np.array([[0.0, 2.0], [1.0, 2.0], [2.5, 2.0]])
    r1 = gge_report(JointEnsemble(base, np.array([1, 2, 1]), np.array([0.7, 0.0])))
    r2 = gge_report(JointEnsemble(base, np.array([1, 2, 1]), np.array([0.7, 5.0])))
    assert np.allclose(r1.fisher_matrix[1, :], 0) and np.allclose(r1.fisher_matrix[:, 1], 0)
    assert r1.F_S == pytest.approx(r2.F_S, rel=1e-12)


def test_quadratic_form_matches_brute_force_variance():
    rng = np.random.default_rng(4)
    charges, g = random_states(rng, 4, 2)
    lam = np.array([0.8, -0.4])
    r = gge_report(JointEnsemble(charges, g, lam))
    # brute force over the four microstates
    w = [gi * math.exp(-float(c @ lam)) for c, gi in zip(charges, g)]
    z = math.fsum(w)
    x = [float(c @ lam) for c in charges]
    mean = math.fsum(wi * xi for wi, xi in zip(w, x)) / z
    var = math.fsum(wi * (xi - mean) ** 2 for wi, xi in zip(w, x)) / z
    assert float(lam @ r.fisher_matrix @ lam) == pytest.approx(var, rel=1e-12)
    assert r.C_v_eff == pytest.approx(var, rel=1e-12)
    assert np.allclose(r.entropy_gradient, -r.fisher_matrix @ lam, rtol=0, atol=1e-12)


def test_degenerate_gge():
    ens = JointEnsemble(np.array([[1.0], [1.0]]), np.array([1, 1]), np.array([2.0]))
    with pytest.raises(DegenerateModelError):
        gge_report(ens)


@settings(max_examples=50, deadline=None)
@given(
    charges=hnp.arrays(float, st.tuples(st.integers(2, 8), st.integers(1, 4)), elements=st.floats(-3, 3)),
    data=st.data(),
)
def test_fisher_matrix_is_psd(charges, data):
    k, m = charges.shape
    lam = np.array(data.draw(st.lists(st.floats(-2, 2), min_size=m, max_size=m)))
    g = np.array(data.draw(st.lists(st.integers(1, 5), min_size=k, max_size=k)))
    ens = JointEnsemble(charges, g, lam)
    p = ens.probabilities()
    cov = (charges - p @ charges).T @ ((charges - p @ charges) * p[:, None])
    try:
        f = gge_report(ens).fisher_matrix
    except DegenerateModelError:
        f = cov
    assert np.allclose(f, f.T)
    assert np.linalg.eigvalsh(f).min() >= -1e-10 * max(np.trace(f), 1e-300)


@pytest.mark.parametrize("seed", range(5))
def test_entropy_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    charges, g = random_states(rng, 6, 3)
    lam = rng.normal(size=3) * 0.5
    ens = JointEnsemble(charges, g, lam)
    grad = gge_report(ens).entropy_gradient
    for k in range(3):
        h = 1e-5
        up, down = lam.copy(), lam.copy()
        up[k] += h
        down[k] -= h
        fd = (ens.with_lambdas(up).entropy() - ens.with_lambdas(down).entropy()) / (2 * h)
        assert fd == pytest.approx(grad[k], rel=1e-6, abs=1e-9)


def _two_site():
    return [{"E": 0.0, "N": 0.0, "degeneracy": 1}, {"E": 1.0, "N": 1.0, "degeneracy": 1}]


def test_gce_two_site_closed_form():
    beta, mu = 1.0, 0.5
    r = gce_report(_two_site(), beta, mu)
    # weights {1, e^-0.5}; H - mu N takes values {0, 0.5}; H and N coincide
    q = math.exp(-0.5) / (1 + math.exp(-0.5))
    v = q * (1 - q)
    assert r.F_beta_beta == pytest.approx(0.25 * v, rel=1e-12)
    assert r.F_mu_mu == pytest.approx(v, rel=1e-12)
    assert r.F_beta_mu == pytest.approx(-0.5 * v, rel=1e-12)
    assert r.F_S_gce == pytest.approx(1 / (0.25 * v), rel=1e-12)
    assert r.C_v_mu == pytest.approx(0.25 * v, rel=1e-12)
    assert r.C_v_fixed_N == pytest.approx(0.0, abs=1e-12)


def test_gce_matches_gge_parametrisation():
    states = [(0.0, 0, 1), (1.0, 1, 2), (1.7, 1, 1), (2.2, 2, 1), (3.1, 2, 3)]
    beta, mu = 0.8, 0.3
    g = gce_report(states, beta, mu)
    e = np.array([[s[0], s[1]] for s in states])
    gge = gge_report(JointEnsemble(e, np.array([s[2] for s in states]), np.array([beta, -beta * mu])))
    assert g.F_S_gce == pytest.approx(gge.F_S, rel=1e-12)
    # (beta, mu) entries from the natural-parameter covariance by the chain rule
    jac = np.array([[1.0, 0.0], [-mu, -beta]])
    assert np.allclose(jac.T @ gge.fisher_matrix @ jac, g.fisher_matrix, rtol=1e-12, atol=1e-14)


def test_gce_constant_particle_number():
    states = [(0.0, 2, 1), (1.0, 2, 2), (2.5, 2, 1)]
    r = gce_report(states, 1.2, 0.4)
    canonical = gge_report(JointEnsemble(np.array([[0.0], [1.0], [2.5]]), np.array([1, 2, 1]), np.array([1.2])))
    assert r.C_v_mu == pytest.approx(canonical.C_v_eff, rel=1e-12)
    assert r.C_v_fixed_N is None
    assert r.F_mu_mu == 0.0


def test_gce_uncorrelated_fixed_n():
    # N symmetric around its mean at every energy: Cov(H, N) = 0
    states = [(0.0, 0, 1), (0.0, 2, 1), (1.0, 0, 1), (1.0, 2, 1)]
    r = gce_report(states, 1.0, 0.0)
    var_h = math.e / (1 + math.e) ** 2
    assert r.C_v_fixed_N == pytest.approx(var_h, rel=1e-12)


def test_cauchy_schwarz_on_random_ensembles():
    rng = np.random.default_rng(2025)
    violations = 0
    for _ in range(100):
        k = int(rng.integers(2, 9))
        states = [(float(rng.normal()), float(rng.integers(0, 4)), int(rng.integers(1, 3))) for _ in range(k)]
        beta = float(rng.uniform(0.2, 3.0))
        mu = float(rng.normal())
        try:
            r = gce_report(states, beta, mu)
        except DegenerateModelError:
            continue
        e = np.array([s[0] for s in states])
        p = JointEnsemble(np.array([[s[0], s[1]] for s in states]), np.array([s[2] for s in states]), np.array([beta, -beta * mu])).probabilities()
        cv = beta**2 * float(p @ (e - p @ e) ** 2)
        if r.C_v_fixed_N is not None and r.C_v_fixed_N > cv * (1 + 1e-12):
            violations += 1
    assert violations == 0


def test_conjugate_pair_volume_example():
    states = [{"E": 0.0, "A": 1.0}, {"E": 0.0, "A": 2.0}]
    r = conjugate_pair_report(states, 1.0, 0.0)
    assert r.F_A == pytest.approx(4.0, rel=1e-14)
    assert r.F_lambda == pytest.approx(0.25, rel=1e-14)
    assert r.bound_for_n(10) == pytest.approx(0.01, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    energies=st.lists(st.floats(-2, 2), min_size=3, max_size=6),
    beta=st.floats(0.1, 5.0),
    lam=st.floats(-1.0, 1.0),
)
def test_conjugate_pair_product_is_universal(energies, beta, lam):
    states = [(e, float(i % 3), 1) for i, e in enumerate(energies)]
    r = conjugate_pair_report(states, beta, lam)
    assert r.F_lambda * r.F_A * (1 / beta) ** 2 == pytest.approx(1.0, rel=1e-12)


def test_conjugate_pair_degenerate():
    with pytest.raises(DegenerateModelError):
        conjugate_pair_report([(0.0, 1.0, 1), (1.0, 1.0, 1)], 1.0, 0.5)


def test_json_ensemble_parsing():
    doc = {"lambdas": [1.0, 0.5], "states": [{"charges": [0, 0], "g": 1}, {"charges": [1, 2]}]}
    ens = ensemble_from_json(doc)
    assert ens.m == 2 and ens.degeneracies.tolist() == [1.0, 1.0]
    with pytest.raises(ModelError):
        ensemble_from_json({"lambdas": [1.0], "states": [{"charges": [0, 0]}]})
    with pytest.raises(ModelError):
        ensemble_from_json({"states": []})
