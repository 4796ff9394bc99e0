import json
import subprocess
import sys

import pytest

from lrxxz import cli, io, observables


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_run_two_site(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"N": 2, "J": 1, "alpha": 1000, "gamma": 2, "solver": "ness-direct"})
    assert run("run", "--config", cfg, "--out", tmp_path / "o") == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["record"]["j_ness"] > 0
    (rec,) = io.read_records(tmp_path / "o" / "summary.csv")
    assert rec.j_ness == summary["record"]["j_ness"]
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["solver"] == "ness-direct" and "summary.csv" in man["outputs"]
    assert (tmp_path / "o" / "summary.csv").read_text().startswith("# manifest: manifest.json")


def test_exit_codes(tmp_path, capsys):
    assert run("run", "--config", write(tmp_path / "a.json", {"N": 8, "solver": "ness-direct"}),
               "--out", tmp_path / "o") == cli.EXIT_GUARD
    assert run("run", "--config", write(tmp_path / "b.json", {"N": 3, "bogus": 1}),
               "--out", tmp_path / "o") == cli.EXIT_USAGE
    assert run("run", "--config", tmp_path / "missing.json", "--out", tmp_path / "o") == cli.EXIT_USAGE
    assert run("sweep", "--config", write(tmp_path / "e.json", {"points": []}),
               "--out", tmp_path / "o") == cli.EXIT_USAGE
    (tmp_path / "bad.csv").write_text("x,y\n1,2\n")
    assert run("fit", tmp_path / "bad.csv", "--out", tmp_path / "o") == cli.EXIT_USAGE
    assert run("fit", tmp_path / "bad.csv", "--epsilon", "-1") == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == cli.EXIT_USAGE


@pytest.mark.filterwarnings("ignore:steady-window halves")
def test_trajectory_run_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path / "t.json", {"N": 3, "alpha": 2.0, "solver": "trajectories", "n_traj": 20,
                                      "t_end": 60.0, "seed": 5})
    for out in ("a", "b"):
        assert run("run", "--config", cfg, "--out", tmp_path / out) == 0
    for name in ("summary.csv", "series.csv", "summary.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert not (tmp_path / "a" / "ensemble_checkpoint.npz").exists()
    # flags override the config and change the result
    assert run("run", "--config", cfg, "--out", tmp_path / "c", "--seed", "6", "--traj", "10") == 0
    (rec,) = io.read_records(tmp_path / "c" / "summary.csv")
    assert rec.seed == 6 and rec.n_traj == 10


def test_sweep_resume_matches_uninterrupted(tmp_path, capsys):
    spec = write(tmp_path / "s.json", {"N": [2, 3, 4], "alpha": [0.5, 2.0], "gamma": [2.0]})
    assert run("sweep", "--config", spec, "--out", tmp_path / "full") == 0
    full = (tmp_path / "full" / "sweep.csv").read_text()
    assert len(io.parse_records(full)) == 6
    # an interrupted sweep leaves a prefix of complete rows
    part = tmp_path / "part"
    part.mkdir()
    (part / "sweep.csv").write_text("\n".join(full.splitlines()[:4]) + "\n")
    assert run("sweep", "--config", spec, "--out", part, "--resume") == 0
    assert (part / "sweep.csv").read_text() == full


def test_sweep_records_failures_and_continues(tmp_path, capsys):
    spec = write(tmp_path / "s.json", {"N": [3, 8], "alpha": [2.0], "gamma": [2.0], "solver": "exact-rk4",
                                       "t_max": 5.0})
    assert run("sweep", "--config", spec, "--out", tmp_path / "o") == 0
    recs = io.read_records(tmp_path / "o" / "sweep.csv")
    assert len(recs) == 2 and all(r.status.startswith("error") for r in recs)


def test_fit_outputs(tmp_path, capsys):
    recs = [io.SweepRecord(N=n, alpha=1.0, gamma=2.0, j_ness=0.5 / n) for n in range(4, 10)]
    recs += [io.SweepRecord(N=n, alpha=0.1, gamma=2.0, j_ness=0.4) for n in range(4, 10)]
    io.write_records(tmp_path / "in.csv", recs)
    assert run("fit", tmp_path / "in.csv", "--out", tmp_path / "f", "--epsilon", "0.05") == 0
    fits = json.loads((tmp_path / "f" / "fits.json").read_text())
    assert fits["epsilon"] == 0.05
    by_alpha = {f["alpha"]: f for f in fits["fits"]}
    assert by_alpha[1.0]["gamma_exp"] == pytest.approx(1.0, abs=1e-12)
    assert set(by_alpha[0.1]["regimes"].values()) == {"ballistic"}
    dat = (tmp_path / "f" / "fit_alpha1_gamma2.dat").read_text().splitlines()
    assert dat[0].startswith("# N") and len(dat) == 7
    assert "fit_alpha0.1_gamma2.dat" in (tmp_path / "f" / "plot_fits.gp").read_text()


def test_verify_subset(capsys):
    assert run("verify", "--only", "analytic-eigensystem", "two-site-jz-independence") == 0
    out = capsys.readouterr().out
    assert "2/2 checks passed" in out


def test_verify_catches_sabotaged_sign(monkeypatch, capsys):
    good = observables.spin_current
    monkeypatch.setattr(observables, "spin_current", lambda x, k, J=1.0: -good(x, k, J))
    assert run("verify", "--only", "current-sign-convention") == cli.EXIT_VERIFY
    assert "[FAIL]" in capsys.readouterr().out


def test_bench(tmp_path, capsys):
    assert run("bench", "--sizes", "4", "6", "--max-rho-n", "6", "--out", tmp_path) == 0
    rows = json.loads((tmp_path / "bench.json").read_text())["rows"]
    assert [r["N"] for r in rows] == [4, 6] and all(r["trajectory_step_us"] > 0 for r in rows)


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path / "c.json", {"N": 2})
    p = subprocess.run([sys.executable, "-m", "lrxxz", "run", "--config", cfg, "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert p.returncode == 0, p.stderr
    assert "solver=ness-direct" in p.stdout


@pytest.mark.slow
def test_verify_full_suite(capsys):
    assert run("verify") == 0
