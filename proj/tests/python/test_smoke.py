import math

import pytest

import pchaos


def test_gamma_kernel_report():
    h = pchaos.gamma_block_kernel(100.0, 1)
    assert h.order == 2
    assert pchaos.norm2(h) == pytest.approx(1.0)
    rep = pchaos.dejong_report(h, 1.0)
    assert rep["Cn"] == pytest.approx(100.0 ** -0.25)
    assert rep["Bn"] == pytest.approx(0.5)
    assert abs(rep["variance_gap"]) < 1e-12
    assert abs(rep["middle_defect"]) < 1e-12


def test_exact_moments_match_closed_form():
    n = 50.0
    h = pchaos.gamma_block_kernel(n, 1)
    assert pchaos.third_moment(h) == pytest.approx(8.0)
    assert pchaos.fourth_moment(h) == pytest.approx(60.0 + 48.0 / n + 8.0 / n**2)
    assert pchaos.three_moment_criterion(h, 1.0) == pytest.approx(48.0 / n + 8.0 / n**2)


def test_constants_and_target():
    assert pchaos.c_q_constant(2) == 1.0
    assert pchaos.c_q_constant(4) == pytest.approx(1.0 / 18.0)
    assert pchaos.gamma_moment(2.0, 4) == pytest.approx(12 * 4 + 48 * 2)
    # nu = 2: centred exponential with mean 2, so P(X <= 0) = 1 - e^-1.
    assert pchaos.gamma_cdf(2.0, 0.0) == pytest.approx(1.0 - math.exp(-1.0))


def test_fit_rate():
    slope, stderr, intercept = pchaos.fit_rate([(n, 7.0 * n**-0.25) for n in (100, 400, 1600)])
    assert slope == pytest.approx(-0.25)
    assert abs(stderr) < 1e-12
    with pytest.raises(ValueError):
        pchaos.fit_rate([(1, 1.0), (2, 0.0), (3, 1.0)])


def test_sampling_is_seeded():
    h = pchaos.gamma_block_kernel(40.0, 1)
    a = pchaos.sample_integral(h, 2000, seed=5)
    b = pchaos.sample_integral(h, 2000, seed=5)
    assert a == b
    mean = sum(a) / len(a)
    var = sum((x - mean) ** 2 for x in a) / (len(a) - 1)
    assert abs(mean) < 0.15
    assert var == pytest.approx(2.0, rel=0.15)


def test_config_kernel_and_errors():
    text = pchaos.builtin_config("gamma-ustat")
    h = pchaos.kernel_from_config(text, 100.0)
    assert pchaos.norm2(h) == pytest.approx(1.0)
    with pytest.raises(pchaos.ConfigError, match="line 3"):
        pchaos.kernel_from_config("[study]\nid = gamma-ustat\nn = 3, 2, 1\n", 1.0)


def test_run_writes_artifacts(tmp_path):
    text = "[study]\nid = three-moment\nn = 20, 40, 80\nreplications = 200\nseed = 7\n"
    res = pchaos.run(text, str(tmp_path))
    assert res["id"] == "three-moment"
    assert res["passed"]
    assert (tmp_path / "three-moment.csv").exists()
    again = pchaos.run(text, str(tmp_path / "again"))
    assert (tmp_path / "three-moment.csv").read_bytes() == (tmp_path / "again" / "three-moment.csv").read_bytes()
    assert set(pchaos.study_ids()) >= {"gamma-ustat", "hybrid-gp", "identity-suite"}
