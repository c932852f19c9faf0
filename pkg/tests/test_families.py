import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs
from scipy.special import expit, logit

import seqtest as st
from seqtest.families import ObservationScheme

ALL_MODELS = ["gaussian-mean", "bernoulli", "binomial(3)", "exponential-rate", "gaussian-variance"]


def build(name):
    return st.make_named_family(name)


class TestLogPartition:
    def test_gaussian_mean_closed_form(self):
        fam = build("gaussian-mean")
        assert st.log_partition(fam, 3.0) == pytest.approx(4.5, abs=0)

    def test_bernoulli_at_zero(self):
        fam = build("bernoulli")
        assert st.log_partition(fam, 0.0) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_two_point_scheme_by_hand(self, tmp_path):
        path = tmp_path / "scheme.csv"
        path.write_text("x,h\n0,1\n1,1\n")
        fam = st.family_from_scheme_csv(path)
        assert st.log_partition(fam, 1.0) == pytest.approx(math.log(1.0 + math.e), abs=1e-14)

    def test_domain_violation(self):
        fam = build("exponential-rate")
        with pytest.raises(ValueError, match="natural domain"):
            st.log_partition(fam, -1.0)
        with pytest.raises(ValueError, match="natural domain"):
            st.log_partition(fam, 0.0)  # boundary of the open interval is rejected


class TestLogDensity:
    def test_gaussian_mean_at_origin_parameter(self):
        fam = build("gaussian-mean")
        assert st.log_density(fam, 0.0, 7.0) == 0.0

    def test_bernoulli_symmetric(self):
        fam = build("bernoulli")
        assert st.log_density(fam, 0.0, 1.0) == pytest.approx(-math.log(2.0), abs=1e-15)

    def test_gaussian_mean_cancellation(self):
        fam = build("gaussian-mean")
        assert st.log_density(fam, 2.0, 1.0) == 0.0


class TestNamedFamilies:
    def test_bernoulli_transform_at_half(self):
        fam = build("bernoulli")
        assert fam.transform.to_natural(0.5) == pytest.approx(0.0, abs=1e-15)
        assert fam.transform.from_natural(0.0) == pytest.approx(0.5, abs=1e-15)
        assert not fam.transform.flips_order

    def test_exponential_rate_stores_negated_observation(self):
        fam = build("exponential-rate")
        assert fam.observation_map(2.0) == -2.0

    def test_gaussian_variance_transform_flips_order(self):
        fam = build("gaussian-variance")
        assert fam.transform.to_natural(2.0) == pytest.approx(0.25, abs=1e-15)
        assert fam.transform.to_natural(1.0) == pytest.approx(1.0, abs=1e-15)
        assert fam.transform.flips_order

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown model"):
            st.make_named_family("weibull")

    def test_binomial_requires_valid_count(self):
        with pytest.raises(ValueError, match="N >= 1"):
            st.make_named_family("binomial(0)")
        with pytest.raises(ValueError, match="trial count"):
            st.make_named_family("binomial")

    @pytest.mark.parametrize(
        "name,originals",
        [
            ("gaussian-mean", (-1.3, 0.0, 2.4)),
            ("bernoulli", (0.2, 0.5, 0.93)),
            ("binomial(3)", (0.2, 0.5, 0.93)),
            ("exponential-rate", (0.4, 1.0, 3.1)),
            ("gaussian-variance", (0.5, 1.0, 2.2)),
        ],
    )
    def test_transform_round_trip(self, name, originals):
        fam = build(name)
        for orig in originals:
            u = fam.transform.to_natural(orig)
            assert fam.transform.from_natural(u) == pytest.approx(orig, abs=1e-12)


class TestSampler:
    def test_bernoulli_symmetric_coin(self):
        fam = build("bernoulli")
        rng = np.random.default_rng(11)
        draws = st.sample_observation(fam, 0.0, rng, size=100_000)
        assert abs(draws.mean() - 0.5) < 0.005

    def test_gaussian_mean(self):
        fam = build("gaussian-mean")
        rng = np.random.default_rng(12)
        draws = st.sample_observation(fam, 1.0, rng, size=100_000)
        assert abs(draws.mean() - 1.0) < 0.01

    def test_exponential_rate_negated_mean(self):
        fam = build("exponential-rate")
        rng = np.random.default_rng(13)
        draws = st.sample_observation(fam, 2.0, rng, size=100_000)
        assert abs(draws.mean() - (-0.5)) < 0.005

    @pytest.mark.parametrize("name,u", [("binomial(3)", 0.4), ("gaussian-variance", 1.3)])
    def test_sampler_matches_mean_identity(self, name, u):
        # empirical mean against the finite-difference derivative of B
        fam = build(name)
        rng = np.random.default_rng(14)
        draws = st.sample_observation(fam, u, rng, size=200_000)
        h = 1e-5
        b_prime = (st.log_partition(fam, u + h) - st.log_partition(fam, u - h)) / (2 * h)
        sd = draws.std()
        assert abs(draws.mean() - b_prime) < 4.0 * sd / math.sqrt(draws.size)

    def test_deterministic_given_rng_state(self):
        fam = build("gaussian-variance")
        a = st.sample_observation(fam, 1.0, np.random.default_rng(5), size=10)
        b = st.sample_observation(fam, 1.0, np.random.default_rng(5), size=10)
        np.testing.assert_array_equal(a, b)


def _test_points(family):
    lo, hi = family.scheme_domain or (-3.0, 3.0)
    lo = max(lo, -3.0)
    hi = min(hi, 4.0)
    return np.linspace(lo, hi, 9)


class TestStructure:
    @pytest.mark.parametrize("name", ALL_MODELS)
    def test_log_partition_convex(self, name):
        fam = build(name)
        us = _test_points(fam)
        for i in range(len(us) - 2):
            u1, u2, u3 = us[i], us[i + 1], us[i + 2]
            lam = (u3 - u2) / (u3 - u1)
            chord = lam * st.log_partition(fam, u1) + (1 - lam) * st.log_partition(fam, u3)
            assert st.log_partition(fam, u2) <= chord + 1e-12

    @pytest.mark.parametrize("name", ALL_MODELS)
    def test_normalization_under_scheme(self, name):
        fam = build(name)
        tol = 1e-12 if fam.scheme.kind == "finite" else 1e-11
        for u in _test_points(fam):
            total = np.exp(fam.scheme.log_mass + u * fam.scheme.points - st.log_partition(fam, u)).sum()
            assert abs(total - 1.0) < tol

    @pytest.mark.parametrize("name", ALL_MODELS)
    def test_mean_identity_finite_difference(self, name):
        fam = build(name)
        for u in _test_points(fam):
            probs = np.exp(fam.scheme.log_mass + u * fam.scheme.points - st.log_partition(fam, u))
            scheme_mean = float(probs @ fam.scheme.points)
            h = 1e-5
            b_prime = (st.log_partition(fam, u + h) - st.log_partition(fam, u - h)) / (2 * h)
            assert scheme_mean == pytest.approx(b_prime, abs=1e-7)

    @pytest.mark.parametrize("name", ALL_MODELS)
    def test_monotone_expectation_of_indicators(self, name):
        # E[1{X >= t}] is non-decreasing in the parameter for every t
        fam = build(name)
        us = _test_points(fam)
        x = fam.scheme.points
        thresholds = np.quantile(x, [0.1, 0.35, 0.6, 0.85])
        for t in thresholds:
            sel = x >= t
            vals = [
                np.exp(fam.scheme.log_mass[sel] + u * x[sel] - st.log_partition(fam, u)).sum()
                for u in us
            ]
            assert np.all(np.diff(vals) >= -1e-12)


@settings(max_examples=30, deadline=None)
@given(u=hs.floats(-5, 5), x=hs.floats(-10, 10))
def test_log_density_formula(u, x):
    fam = st.make_named_family("gaussian-mean")
    assert st.log_density(fam, u, x) == pytest.approx(u * x - 0.5 * u * u, abs=1e-12)


class TestSchemeValidation:
    def test_nodes_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            ObservationScheme(kind="finite", points=np.array([1.0, 1.0]), base_weights=np.array([1.0, 1.0]))

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError, match="strictly positive"):
            ObservationScheme(kind="finite", points=np.array([0.0, 1.0]), base_weights=np.array([1.0, 0.0]))

    def test_scheme_csv_errors(self, tmp_path):
        bad_header = tmp_path / "a.csv"
        bad_header.write_text("x,weight\n0,1\n")
        with pytest.raises(ValueError, match="header 'x,h'"):
            st.family_from_scheme_csv(bad_header)
        dup = tmp_path / "b.csv"
        dup.write_text("x,h\n0,1\n0,2\n")
        with pytest.raises(ValueError, match="duplicate"):
            st.family_from_scheme_csv(dup)
        nonpos = tmp_path / "c.csv"
        nonpos.write_text("x,h\n0,1\n1,-2\n")
        with pytest.raises(ValueError, match="strictly positive"):
            st.family_from_scheme_csv(nonpos)

    def test_scheme_csv_round_trip_behaviour(self, tmp_path):
        # a skewed three-point die; checking the custom loader against a
        # direct log-sum-exp of its rows
        path = tmp_path / "die.csv"
        path.write_text("x,h\n-1,0.5\n0,1.0\n2,0.25\n")
        fam = st.family_from_scheme_csv(path)
        u = 0.7
        direct = math.log(
            0.5 * math.exp(-u) + 1.0 + 0.25 * math.exp(2 * u)
        )
        assert st.log_partition(fam, u) == pytest.approx(direct, abs=1e-13)
        rng = np.random.default_rng(3)
        draws = st.sample_observation(fam, 0.0, rng, size=50_000)
        assert set(np.unique(draws)) <= {-1.0, 0.0, 2.0}


def test_family_for_prior_sizes_windows():
    prior = st.make_prior([0.6, 1.1, 2.5], [1, 1, 1], 1.0)
    fam = st.family_for_prior("exponential-rate", prior)
    st.validate_prior_for_family(prior, fam)
    # default window starts at 0.25, so a smaller atom is rejected there
    small = st.make_prior([0.05, 1.0], [1, 1], 0.5)
    with pytest.raises(ValueError, match="scheme window"):
        st.validate_prior_for_family(small, st.make_named_family("exponential-rate"))
    fam_small = st.family_for_prior("exponential-rate", small)
    st.validate_prior_for_family(small, fam_small)
