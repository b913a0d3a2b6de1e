import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from creditqmc.credit import (
    Credit,
    DataError,
    ForwardCurveSet,
    INITIAL_RATINGS,
    MarketData,
    Rating,
    RecoveryTable,
    Seniority,
    TransitionMatrix,
    compute_thresholds,
    default_value,
    draw_recovery,
    forward_one_year,
    load_portfolio_csv,
    portfolio_to_csv,
    present_value,
    rating_from_z,
    ratings_from_z,
    year_end_value,
)
from creditqmc.gaussian import inverse_normal_cdf, normal_cdf
from creditqmc.sequences import PseudoRandomStream


def curve(rates_pct, rating=Rating.BBB):
    return ForwardCurveSet({(rating, t + 1): r for t, r in enumerate(rates_pct)})


def bond(face=100.0, coupon=5.0, maturity=2, rating=Rating.BBB, seniority=Seniority.SENIOR_UNSECURED):
    return Credit(face, coupon, maturity, rating, seniority)


# --- domain types ----------------------------------------------------------


def test_credit_validation():
    with pytest.raises(ValueError):
        bond(face=0)
    with pytest.raises(ValueError):
        bond(coupon=-1)
    with pytest.raises(ValueError):
        bond(maturity=0)
    with pytest.raises(ValueError):
        bond(maturity=2.5)
    with pytest.raises(ValueError):
        bond(rating=Rating.D)


def test_rating_and_seniority_parsing():
    assert Rating.parse("Default") is Rating.D
    assert Rating.parse(" bbb ") is Rating.BBB
    assert Seniority.parse("senior unsecured") is Seniority.SENIOR_UNSECURED
    assert len(Seniority) == 5
    with pytest.raises(ValueError):
        Rating.parse("BBB+")


def test_recovery_defaults_match_published_table():
    t = RecoveryTable.default()
    expected = {
        Seniority.SENIOR_SECURED: (53.80, 26.86),
        Seniority.SENIOR_UNSECURED: (51.13, 25.45),
        Seniority.SENIOR_SUBORDINATED: (38.52, 23.81),
        Seniority.SUBORDINATED: (32.74, 20.18),
        Seniority.JUNIOR_SUBORDINATED: (17.09, 10.90),
    }
    for s, (m, sd) in expected.items():
        assert t.mean(s) == m and t.std(s) == sd


def test_transition_default_rows():
    t = TransitionMatrix.default()
    assert t.row(Rating.B)[Rating.D] == 5.20
    assert t.row(Rating.BB)[Rating.D] == 1.06
    assert t.row(Rating.AAA)[Rating.D] == 0.0
    assert np.all(np.abs(t.percent.sum(axis=1) - 100) <= 0.01 + 1e-9)


def test_transition_rejects_bad_row_sum():
    pct = TransitionMatrix.default().percent.copy()
    pct[Rating.CCC, Rating.BBB] = 1.40  # row then sums to 100.11
    with pytest.raises(DataError):
        TransitionMatrix(pct)
    pct[Rating.CCC, Rating.BBB] = -0.1
    with pytest.raises(DataError):
        TransitionMatrix(pct)


def test_transition_csv_missing_entry():
    with pytest.raises(DataError):
        TransitionMatrix.from_csv(io.StringIO("rating,AAA,AA\nAAA,90,10\n"))


# --- pricing ---------------------------------------------------------------


def test_present_value_zero_curve():
    assert present_value(bond(coupon=5, maturity=2), ForwardCurveSet.flat(0.0)) == pytest.approx(110.0)


@pytest.mark.parametrize("maturity", [1, 2, 5, 10])
def test_present_value_par_bond(maturity):
    assert present_value(bond(coupon=5, maturity=maturity), ForwardCurveSet.flat(5.0)) == pytest.approx(100.0)


def test_present_value_three_cash_flows():
    oracle = 6 / 1.03 + 6 / 1.04**2 + 106 / 1.05**3
    assert present_value(bond(coupon=6, maturity=3), curve([3, 4, 5])) == pytest.approx(oracle, rel=1e-14)
    assert oracle == pytest.approx(102.9394, abs=1e-4)


def test_missing_curve_point_named():
    with pytest.raises(DataError, match=r"BBB.*3"):
        present_value(bond(maturity=3), curve([3, 4]))


@settings(max_examples=50, deadline=None)
@given(
    st.floats(1, 1e7), st.floats(0, 20), st.integers(1, 30),
)
def test_present_value_undiscounted_property(face, coupon, maturity):
    c = bond(face=face, coupon=coupon, maturity=maturity)
    cash = face * coupon / 100 * maturity + face
    assert present_value(c, ForwardCurveSet.flat(0.0)) == pytest.approx(cash, rel=1e-12)


def test_forward_rate():
    assert forward_one_year(ForwardCurveSet.flat(4.0), Rating.A, 2) == pytest.approx(0.04, abs=1e-15)
    assert forward_one_year(ForwardCurveSet.flat(7.3), Rating.A, 9) == pytest.approx(0.073, abs=1e-15)
    assert forward_one_year(curve([3, 4, 5]), Rating.BBB, 3) == pytest.approx(
        (1.05**3 / 1.03) ** 0.5 - 1, rel=1e-14
    )
    assert forward_one_year(curve([3, 4, 5]), Rating.BBB, 3) == pytest.approx(0.060145, abs=1e-6)
    with pytest.raises(ValueError):
        forward_one_year(ForwardCurveSet.flat(4.0), Rating.A, 1)


def test_year_end_value_one_year_bond():
    for y in INITIAL_RATINGS:
        assert year_end_value(bond(maturity=1), y, ForwardCurveSet.flat(9.0)) == 105.0


def test_year_end_value_two_year_par():
    assert year_end_value(bond(maturity=2), Rating.BBB, ForwardCurveSet.flat(5.0)) == pytest.approx(100.0)


def test_year_end_value_excludes_horizon_coupon_and_uses_forwards():
    curves = curve([3, 4, 5, 6], Rating.A)
    c = bond(face=200, coupon=7, maturity=4)
    f = [((1 + r / 100) ** t / 1.03) ** (1 / (t - 1)) - 1 for t, r in ((2, 4), (3, 5), (4, 6))]
    oracle = 14 / (1 + f[0]) + 14 / (1 + f[1]) ** 2 + 214 / (1 + f[2]) ** 3
    assert year_end_value(c, Rating.A, curves) == pytest.approx(oracle, rel=1e-14)


def test_year_end_value_monotone_in_rating():
    market = MarketData()
    for t in range(1, 11):
        c = bond(maturity=t)
        vals = [year_end_value(c, y, market.curves) for y in INITIAL_RATINGS]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_year_end_value_rejects_default():
    with pytest.raises(ValueError):
        year_end_value(bond(), Rating.D, ForwardCurveSet.flat(5.0))


def test_default_value():
    c = bond(face=100)
    assert default_value(c, 51.13) == pytest.approx(51.13)
    assert default_value(c, 0) == 0
    assert default_value(c, 100) == 100
    with pytest.raises(ValueError):
        default_value(c, 100.5)


def test_curve_file_round_trip(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("rating,maturity,rate_pct\nA,1,3.0\nA,2,3.5\n")
    cs = ForwardCurveSet.from_csv(p)
    assert cs.rate(Rating.A, 2) == pytest.approx(0.035)
    with pytest.raises(DataError):
        cs.rate(Rating.B, 1)
    with pytest.raises(DataError):
        ForwardCurveSet.from_csv(tmp_path / "nope.csv")


def test_bundled_curves_ordered_by_rating():
    cs = ForwardCurveSet.default()
    for t in range(1, cs.max_maturity + 1):
        r = [cs.rate(x, t) for x in INITIAL_RATINGS]
        assert r == sorted(r)


# --- recovery ---------------------------------------------------------------


def test_fixed_recovery():
    assert draw_recovery(Seniority.JUNIOR_SUBORDINATED, 0.3) == 17.09


def test_stochastic_recovery_moments():
    u = PseudoRandomStream(2024, 1).points(0, 1_000_000)[:, 0]
    u = u[u > 0]
    r = draw_recovery(Seniority.SENIOR_SECURED, u, "stochastic")
    assert abs(r.mean() - 53.80) < 0.1
    assert abs(r.std() - 26.86) < 0.2
    a, b = RecoveryTable.default().beta_parameters(Seniority.SENIOR_SECURED)
    assert draw_recovery(Seniority.SENIOR_SECURED, 0.5, "stochastic") == pytest.approx(
        100 * stats.beta.median(a, b)
    )


def test_beta_parameters_match_moments():
    t = RecoveryTable.default()
    for s in Seniority:
        a, b = t.beta_parameters(s)
        m, v = stats.beta.stats(a, b, moments="mv")
        assert 100 * m == pytest.approx(t.mean(s))
        assert 100 * np.sqrt(v) == pytest.approx(t.std(s))


def test_infeasible_beta_rejected():
    with pytest.raises(DataError):
        RecoveryTable({s: (50.0, 60.0) for s in Seniority}).beta_parameters(Seniority.SENIOR_SECURED)


def test_recovery_domain():
    with pytest.raises(ValueError):
        draw_recovery(Seniority.SENIOR_SECURED, 0.0, "stochastic")
    with pytest.raises(ValueError):
        draw_recovery(Seniority.SENIOR_SECURED, 0.5, "random")


# --- thresholds -------------------------------------------------------------


def test_thresholds_special_values():
    z = compute_thresholds(TransitionMatrix.default())
    assert z.row(Rating.AAA)[0] == -np.inf
    assert z.row(Rating.BB)[0] == pytest.approx(-2.304, abs=1e-3)
    assert z.row(Rating.BB)[0] == pytest.approx(inverse_normal_cdf(0.0106), abs=1e-15)


def test_thresholds_monotone():
    z = compute_thresholds(TransitionMatrix.default())
    for x in INITIAL_RATINGS:
        row = z.row(x)
        assert np.all(row[1:] >= row[:-1])


def test_thresholds_round_trip_on_unit_sum_rows():
    """Rows that add to exactly 100 are reproduced to rounding error."""
    market = MarketData()
    pct = market.transitions.percent
    for x in INITIAL_RATINGS:
        if abs(pct[x].sum() - 100) < 1e-9:
            np.testing.assert_allclose(market.probabilities(x), pct[x] / 100, atol=1e-12)


def test_residual_mass_goes_to_aaa_band():
    market = MarketData()
    p = market.probabilities(Rating.B)
    pct = market.transitions.row(Rating.B)
    np.testing.assert_allclose(p[1:], pct[1:] / 100, atol=1e-12)
    assert p[Rating.AAA] == pytest.approx(1 - pct[1:].sum() / 100, abs=1e-12)


def test_rating_from_z_extremes():
    z = compute_thresholds(TransitionMatrix.default())
    assert rating_from_z(-10, z.row(Rating.BB)) is Rating.D
    for x in INITIAL_RATINGS:
        assert rating_from_z(10, z.row(x)) is Rating.AAA


def test_rating_from_z_half_open_bands():
    row = np.array([-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0])
    assert rating_from_z(-2.0, row) is Rating.D
    assert rating_from_z(np.nextafter(-2.0, 0), row) is Rating.CCC
    assert rating_from_z(1.0, row) is Rating.AA
    assert rating_from_z(np.nextafter(1.0, 2), row) is Rating.AAA


def test_stratified_duality():
    market = MarketData()
    z = inverse_normal_cdf((np.arange(1_000_000) + 0.5) / 1_000_000)
    rows = np.array([market.thresholds.row(x) for x in INITIAL_RATINGS])
    r = ratings_from_z(np.repeat(z[:, None], 7, axis=1), rows)
    for k, x in enumerate(INITIAL_RATINGS):
        freq = np.bincount(r[:, k], minlength=8) / len(z)
        np.testing.assert_allclose(freq, market.transitions.row(x) / 100, atol=2e-3)


def test_b_row_default_frequency():
    market = MarketData()
    z = inverse_normal_cdf(PseudoRandomStream(99, 1).points(0, 1_000_000)[:, 0].clip(1e-300))
    r = ratings_from_z(z[:, None], market.thresholds.row(Rating.B)[None, :])
    assert abs(np.mean(r == Rating.D) - 0.0520) <= 0.0007


def test_vectorized_matches_scalar():
    market = MarketData()
    rng = np.random.default_rng(3)
    z = rng.standard_normal((200, 7)) * 2
    rows = np.array([market.thresholds.row(x) for x in INITIAL_RATINGS])
    r = ratings_from_z(z, rows)
    for i in range(200):
        for k in range(7):
            assert r[i, k] == rating_from_z(z[i, k], rows[k])


def test_band_probabilities_are_cdf_differences():
    market = MarketData()
    row = market.thresholds.row(Rating.BBB)
    p = market.probabilities(Rating.BBB)
    assert p[Rating.D] == pytest.approx(normal_cdf(row[0]))
    assert p.sum() == pytest.approx(1.0, abs=1e-15)


# --- portfolio file ---------------------------------------------------------


def test_portfolio_csv_round_trip():
    credits = [
        Credit(1e6, 5.25, 3, Rating.BB, Seniority.SUBORDINATED, id="X1"),
        Credit(123456.789, 0.0, 1, Rating.AAA, Seniority.SENIOR_SECURED, id="X2"),
    ]
    text = portfolio_to_csv(credits)
    assert text.splitlines()[0] == "id,face_value,coupon_pct,maturity_years,rating,seniority"
    assert load_portfolio_csv(io.StringIO(text)) == credits


def test_portfolio_csv_errors():
    with pytest.raises(DataError):
        load_portfolio_csv(io.StringIO("id,face\n1,2\n"))
    bad = "id,face_value,coupon_pct,maturity_years,rating,seniority\nA,100,5,2,D,SeniorSecured\n"
    with pytest.raises(DataError, match="row 1"):
        load_portfolio_csv(io.StringIO(bad))
