import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import draws
from coinfect.exceptions import (
    ConfigParseError,
    DegenerateDelta,
    EqualSigmas,
    InconsistentRates,
    NonPositiveK,
    NonPositiveRate,
    SigmaOrderViolation,
)
from coinfect.params import (
    ParamSet,
    ScaledParamSet,
    derive,
    dump_params,
    load_params,
    materialize_scaled,
    params_from_mapping,
    parse_param_text,
    validate,
)


def test_reference_set_validates():
    p = validate(ParamSet(**draws.P0, K=2.0))
    assert p.sigma == (0.5, 1.0, 2.0)
    assert p.K == 2.0
    assert not p.swapped


def test_strains_relabelled_by_sigma():
    p = validate(ParamSet(**{**draws.P0, "alpha": (1.0, 2.0, 0.5), "eta": (1.2, 3.0),
                             "gamma": (0.1, 0.2)}))
    assert p.swapped
    assert p.sigma == (0.5, 1.0, 2.0)
    assert p.alpha == (2.0, 1.0, 0.5)
    assert p.eta == (3.0, 1.2)
    assert p.gamma == (0.2, 0.1)


def test_swap_carries_removal_split():
    p = validate(ParamSet(r=1, alpha=(1, 2, 0.5), eta=(1.2, 3), gamma=(0.1, 0.2),
                          rho=(0.3, 0.6, 0.7), d=(0.1, 0.7, 0.4, 0.3, 0.2)))
    assert p.mu == (1.0, 1.0, 1.0)
    assert p.rho == (0.6, 0.3, 0.7)
    assert p.d == (0.1, 0.4, 0.7, 0.3, 0.2)


def test_degenerate_delta():
    with pytest.raises(DegenerateDelta):
        validate(ParamSet(**{**draws.P0, "eta": (3.0, 1.5)}))


@pytest.mark.parametrize("field, value, exc", [
    ("r", 0.0, NonPositiveRate),
    ("alpha", (2.0, -1.0, 0.5), NonPositiveRate),
    ("mu", (1.0, 0.0, 1.0), NonPositiveRate),
    ("eta", (-1.0, 1.2), NonPositiveRate),
    ("gamma", (0.2, -0.1), NonPositiveRate),
    ("K", -1.0, NonPositiveK),
    ("mu", (1.0, 0.5, 1.0), EqualSigmas),
    ("mu", (1.0, 1.0, 0.25), SigmaOrderViolation),
])
def test_rejections(field, value, exc):
    with pytest.raises(exc):
        validate(ParamSet(**{**draws.P0, field: value}))


def test_removal_defaults_and_consistency():
    p = draws.p0()
    assert p.rho == p.mu and p.d == (0.0,) * 5
    p = validate(ParamSet(**{**draws.P0, "rho": (0.5, 0.25, 1.0)}))
    assert p.d == (0.0, 0.5, 0.75, 0.0, 0.0)
    with pytest.raises(InconsistentRates):
        validate(ParamSet(**{**draws.P0, "rho": (0.5, 0.5, 0.5), "d": (0, 0.1, 0.1, 0.1, 0)}))
    with pytest.raises(InconsistentRates):
        validate(ParamSet(**{**draws.P0, "rho": (2.0, 0.5, 0.5)}))


def test_derived_reference_values():
    d = derive(draws.p0())
    np.testing.assert_allclose(d.A, (1.5, 0.5, 1.0), rtol=1e-14)
    np.testing.assert_allclose(d.eta_star, (2.0, 2.4), rtol=1e-14)
    assert d.gamma_star == pytest.approx(0.2, rel=1e-14)
    assert d.delta_alpha == pytest.approx(0.6, rel=1e-14)
    assert d.delta_mu == pytest.approx(1.8, rel=1e-14)
    assert d.delta_mu_alt == pytest.approx(1.8, rel=1e-14)
    assert d.K1 == pytest.approx(1.0, rel=1e-14)
    assert d.K2 == pytest.approx(4.0, rel=1e-14)
    assert d.K3 == pytest.approx(12 / 7, rel=1e-14)
    assert d.S_hat1 == pytest.approx(1.9 / 0.65, rel=1e-14)
    assert d.Q == d.sigma[2]
    # alpha2 A1 = alpha3 A3 + alpha1 A2
    assert 1.0 * d.A[0] == pytest.approx(0.5 * d.A[2] + 2.0 * d.A[1])


def test_missing_thresholds():
    d = derive(draws.p0(eta=(0.75, 0.3)))
    assert d.eta_star[0] == pytest.approx(0.5)
    assert d.K1 is None and d.K2 is None and d.K0 is None


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_identities_hold(seed):
    p = draws.any_regime(np.random.default_rng(seed))
    d = derive(p)
    a1, a2, a3 = p.alpha
    assert a2 * d.A[0] == pytest.approx(a3 * d.A[2] + a1 * d.A[1], rel=1e-12)
    assert d.delta_mu == pytest.approx(d.delta_mu_alt, rel=1e-10, abs=1e-12)
    assert d.delta_mu == pytest.approx(p.eta[0] * p.mu[1] - p.eta[1] * p.mu[0], rel=1e-10, abs=1e-12)
    if d.K1 is not None:
        assert d.K2 / d.K1 == pytest.approx(d.sigma[2] / d.sigma[0])


def test_materialize_scaled():
    sp = ScaledParamSet(r=1.0, a=(2.0, 1.0, 0.5), mu=(1.0, 1.0, 1.0), eta=(3.0, 1.2), gamma=(0.2, 0.1))
    p = materialize_scaled(sp, 10.0)
    np.testing.assert_allclose(p.alpha, (0.2, 0.1, 0.05))
    np.testing.assert_allclose(p.sigma, (5.0, 10.0, 20.0))
    assert materialize_scaled(sp, 1.0).alpha == (2.0, 1.0, 0.5)
    # normalized coinfection rates do not depend on K
    np.testing.assert_allclose(derive(materialize_scaled(sp, 7.0)).eta_star,
                               derive(materialize_scaled(sp, 1.0)).eta_star)
    np.testing.assert_allclose(derive(p).K1 / 10.0, derive(materialize_scaled(sp, 1.0)).K1)


def test_parse_and_round_trip(tmp_path):
    text = """
    # reference set
    r = 1
    K: 2
    alpha1 = 2
    alpha2 = 1
    alpha3 = 0.5
    mu1 = 1
    mu2 = 1
    mu3 = 1
    eta1 = 3      # strain 1 coinfection
    eta2 = 1.2
    gamma1 = 0.2
    gamma2 = 0.1
    """
    p = params_from_mapping(parse_param_text(text))
    assert p == validate(ParamSet(**draws.P0, K=2.0))
    path = tmp_path / "p.txt"
    path.write_text(dump_params(p))
    assert load_params(path) == p


def test_scaled_round_trip(tmp_path):
    sp = draws.scaled(np.random.default_rng(1))
    path = tmp_path / "s.txt"
    path.write_text(dump_params(sp))
    assert load_params(path) == sp


@pytest.mark.parametrize("text", [
    "r = 1\nr = 2\n",
    "just words\n",
    "r = one\nalpha1=1\nalpha2=1\nalpha3=1\nmu1=1\nmu2=1\nmu3=1\neta1=1\neta2=1\ngamma1=0\ngamma2=0\n",
    "r = 1\nbeta = 2\n",
    "r = 1\nalpha1 = 2\n",
])
def test_parse_errors(text):
    with pytest.raises(ConfigParseError):
        params_from_mapping(parse_param_text(text))


def test_missing_file():
    with pytest.raises(ConfigParseError):
        load_params("/nonexistent/params.txt")


def test_error_record():
    with pytest.raises(DegenerateDelta) as info:
        validate(ParamSet(**{**draws.P0, "eta": (3.0, 1.5)}))
    rec = info.value.record()
    assert rec["error"] == "DegenerateDelta" and rec["module"] == "params"
