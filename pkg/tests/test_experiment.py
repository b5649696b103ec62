import csv

import pytest

from schmidtprep.benchmarks import ExperimentConfig, HamiltonianSpec, run_experiment
from schmidtprep.errors import ValidationError
from schmidtprep.methods import canonical_method, disentangling_trajectory, run_methods
from schmidtprep.mps import random_mps
from schmidtprep.sso import SsoConfig
from schmidtprep.tno import TnoConfig

FAST = ExperimentConfig(chi_target=4, sso=SsoConfig(max_iter=30), tno=TnoConfig(max_iter=20, sweeps=1))


def test_method_names():
    assert canonical_method("MPD-LW") == "mpd+lw"
    assert canonical_method("sso+all") == "sso+all"
    with pytest.raises(ValidationError):
        canonical_method("dmrg")


def test_run_methods_orderings_and_trajectory():
    target = random_mps(7, 6, 3)
    out = run_methods(target, ["mpd", "sso", "mpd+lw", "mpd+all", "sso+all"], [2, 3], SsoConfig(max_iter=40), TnoConfig(max_iter=30))
    for depth in (2, 3):
        f = {m: out[m][depth][1].F_S for m in out}
        assert f["mpd+lw"] >= f["mpd"] - 1e-10
        assert f["mpd+all"] >= f["mpd+lw"] - 1e-10
        assert f["sso+all"] >= f["sso"] - 1e-10
        for m in out:
            c, rep = out[m][depth]
            assert c.depth == depth and rep.method == m and rep.layers == depth
    # the trajectory of an unrefined circuit reproduces the synthesis record
    c, rep = out["sso"][3]
    states = disentangling_trajectory(target, c, 1e-7)
    assert [s.chi for s in states] == rep.chi_trajectory


def test_chi2_target_mpd_exact():
    res = run_experiment(HamiltonianSpec("ising", 6), ["mpd"], range(1, 4), ExperimentConfig(chi_target=2))
    assert len(res.rows) == 3
    assert all(r["eps_S"] <= 1e-10 for r in res.rows)


def test_single_cell_csv(tmp_path):
    res = run_experiment(HamiltonianSpec("mbl", 6, seed=2), ["sso"], [2], FAST)
    path = tmp_path / "out.csv"
    res.write_csv(path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 1
    assert list(rows[0]) == ["family", "n", "chi_target", "method", "L", "restart", "F_S", "eps_S", "chi_max", "seconds", "seed"]
    assert float(rows[0]["F_S"]) == res.rows[0]["F_S"]


def test_rerun_identical_numbers(tmp_path):
    spec = HamiltonianSpec("hubbard_spinless", 6)
    a = run_experiment(spec, ["mpd", "sso", "sso+all"], [2, 3], FAST)
    b = run_experiment(spec, ["mpd", "sso", "sso+all"], [2, 3], FAST)
    key = ("method", "L", "restart", "F_S", "eps_S", "chi_max", "seed")
    assert [[r[k] for k in key] for r in a.rows] == [[r[k] for k in key] for r in b.rows]


def test_parallel_matches_serial():
    spec = HamiltonianSpec("ising", 6)
    serial = run_experiment(spec, ["mpd", "sso"], [2], FAST)
    cfg = ExperimentConfig(chi_target=4, sso=FAST.sso, tno=FAST.tno, jobs=2)
    parallel = run_experiment(spec, ["mpd", "sso"], [2], cfg)
    assert [r["F_S"] for r in serial.rows] == [r["F_S"] for r in parallel.rows]


def test_failures_are_recorded(monkeypatch):
    import schmidtprep.benchmarks.experiment as ex

    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(ex, "run_methods", broken)
    res = ex.run_experiment(HamiltonianSpec("ising", 4), ["mpd", "mpd+lw"], [2], ExperimentConfig(chi_target=2))
    assert res.rows == []
    assert {(f["method"], f["L"]) for f in res.failures} == {("mpd", 2), ("mpd+lw", 2)}
    assert "boom" in res.failures[0]["error"]


def test_plot_data(tmp_path):
    res = run_experiment(HamiltonianSpec("ising", 6), ["mpd", "sso"], [1, 2], FAST)
    paths = res.write_plot_data(tmp_path)
    assert len(paths) == 2
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "L,mpd,sso" and len(lines) == 3


def test_range_validation():
    with pytest.raises(ValidationError):
        run_experiment(HamiltonianSpec("ising", 4), ["mpd"], [0, 1], FAST)
