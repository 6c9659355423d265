import numpy as np
import pytest

from supercoherence.consistency import analytic_all_to_all
from supercoherence.disorder import Scheme
from supercoherence.errors import ValidationError
from supercoherence.sweep import (Engine, Kind, SweepJob, disorder_average, eta_vs_sigma, gap_and_fidelity_vs_sigma,
                                  network_scan, period_vs_sigma, phase_map, run_sweep, run_task)


def test_job_validation():
    with pytest.raises(ValidationError):
        SweepJob(Kind.ETA_VS_SIGMA, (0.2,), scheme="stratified", realizations=3)
    with pytest.raises(ValidationError):
        SweepJob(Kind.PERIOD, (0.2,), engine="spectral")
    with pytest.raises(ValidationError):
        SweepJob(Kind.ETA_VS_SIGMA, ())
    with pytest.raises(ValidationError):
        SweepJob(Kind.NETWORK_SCAN, (0.2,))
    job = SweepJob(Kind.NETWORK_SCAN, (0.2,), networks=("all",))
    assert job.scheme is Scheme.IID and job.realizations == 8 and job.engine is Engine.SPECTRAL


def test_seeds_xor():
    job = SweepJob(Kind.NETWORK_SCAN, (0.2,), networks=("er:p=0.1",), base_seed=12, realizations=4)
    assert job.seeds() == [12, 13, 14, 15]


def test_selfconsistent_curve():
    res = eta_vs_sigma([0.3, 0.6, 0.95, 1.2], engine="selfconsistent")
    eta = res.values("eta_bar")
    assert eta[0] > eta[1] > 0 and eta[2] == 0 and eta[3] == 0
    assert res.provenance["sigma_c"][str(np.pi / 2)] == pytest.approx(0.9069, abs=1e-4)
    lor = eta_vs_sigma([0.2, 0.5, 0.8], engine="selfconsistent", dist="lorentz")
    np.testing.assert_allclose(lor.values("eta_bar"), (1 - np.array([0.2, 0.5, 0.8])) ** 2, atol=1e-7)


def test_meanfield_vs_selfconsistent():
    grid = [0.2, 0.4, 0.6]
    a = eta_vs_sigma(grid, engine="meanfield", n=1000, t_max=200)
    b = eta_vs_sigma(grid, engine="selfconsistent")
    assert np.max(np.abs(a.values("eta_bar") - b.values("eta_bar"))) < 0.02


def test_phase_map_slice_and_boundary():
    sig = [0.2, 0.5, 1.0]
    th = [0.3, np.pi / 2]
    pm = phase_map(sig, th, dist="uniform")
    curve = eta_vs_sigma(sig, engine="selfconsistent", theta0s=(np.pi / 2,))
    np.testing.assert_allclose(pm.values("eta_bar")[3:], curve.values("eta_bar"), atol=1e-10)
    assert pm.provenance["boundary"][str(np.pi / 2)] == 0.5
    # the Lorentzian boundary at small theta0 is r0 sin(theta0), so only sigma below it survives
    lor = phase_map([0.01, 0.1, 0.3], [0.05], dist="lorentz")
    eta = lor.values("eta_bar")
    assert eta[0] > 0 and np.all(eta[1:] == 0)
    assert lor.provenance["sigma_c"]["0.05"] == pytest.approx(np.sin(0.05), abs=1e-5)


def test_period_rows():
    res = period_vs_sigma([0.05, 0.5, 1.4], n=400, t_max=200)
    p = res.rows
    assert p[0]["period"] is not None and p[0]["period"] < p[1]["period"]
    assert p[2]["period"] is None


def test_gap_sweep_analytic_columns():
    res = gap_and_fidelity_vs_sigma([0.0, 0.1, 0.3])
    r0 = res.rows[0]
    assert r0["e_gap"] == pytest.approx(1.0) and r0["rel_coherence"] == pytest.approx(1.0)
    for row in res.rows[1:]:
        gap, coh = analytic_all_to_all(row["sigma"])
        assert row["e_gap"] == pytest.approx(gap, rel=0.02)
        assert row["rel_coherence_analytic"] == pytest.approx(coh)


def test_determinism_across_workers():
    job = SweepJob(Kind.NETWORK_SCAN, (0.2,), networks=("er:p=0.05", "ws:k=4,p=0.5"), n=200, realizations=3)
    a = run_sweep(job, 1)
    b = run_sweep(job, 2)
    assert a.rows == b.rows


def test_row_independence():
    job = SweepJob(Kind.NETWORK_SCAN, (0.2,), networks=("er:p=0.05", "ws:k=4,p=0.5"), n=200, realizations=2)
    one = SweepJob(Kind.NETWORK_SCAN, (0.2,), networks=("ws:k=4,p=0.5",), n=200, realizations=2)
    assert run_sweep(job).rows[1] == run_sweep(one).rows[0]


def test_failed_row_is_tagged():
    job = SweepJob(Kind.NETWORK_SCAN, (0.2,), networks=("lattice:d=7x7", "all"), n=200, realizations=1,
                   scheme="iid")
    res = run_sweep(job)
    assert res.rows[0]["failed"] == 1 and "ValidationError" in res.rows[0]["error"]
    assert res.rows[1]["failed"] == 0 and res.rows[1]["rel_coherence"] > 0.5
    assert "error" in run_task(job, 0, 0)


def test_er_complete_equals_all_to_all():
    res = network_scan(["all", "er:p=1"], n=300, realizations=2)
    a, b = res.rows
    assert abs(a["rel_coherence"] - b["rel_coherence"]) < 1e-9
    assert abs(a["e_gap"] - b["e_gap"]) < 1e-9


def test_disorder_average():
    assert disorder_average([0.4]) == (0.4, None)
    assert disorder_average([0.4, 0.4]) == (0.4, 0.0)
    assert disorder_average([0.1, 0.3], "stratified")[1] is None


def test_stderr_scaling():
    errs = []
    for r in (4, 16, 64):
        res = network_scan(["er:p=0.02"], n=200, realizations=r)
        errs.append(res.rows[0]["stderr"])
    ratio = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratio > 1.2) & (ratio < 3.5))


def test_csv_json_roundtrip(tmp_path):
    from supercoherence._io import read_csv

    res = gap_and_fidelity_vs_sigma([0.1, 0.2], n=100)
    res.to_csv(tmp_path / "g.csv")
    res.to_json(tmp_path / "g.json")
    meta, cols, rows = read_csv(tmp_path / "g.csv")
    k = cols.index("e_gap")
    assert [r[k] for r in rows] == res.values("e_gap").tolist()
    assert "job" in meta["provenance"] and meta["provenance"]["seeds"] == [0]


def test_cross_engine_low_excitation():
    sig = [0.1, 0.2, 0.3, 0.4]
    spec = gap_and_fidelity_vs_sigma(sig)
    mf = eta_vs_sigma(sig, engine="meanfield", theta0s=(0.05,), t_max=200)
    eta0 = np.sin(0.05) ** 2
    np.testing.assert_allclose(mf.values("eta_bar") / eta0, spec.values("rel_coherence"), rtol=0.05)
