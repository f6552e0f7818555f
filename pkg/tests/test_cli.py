import json
import os
import subprocess
import sys

import pytest

from hankel_sigma.cli import ConfigError, parse_expression, run


def _run(capsys, tmp_path, command, cfg=None, *extra):
    argv = [command, *extra]
    if cfg is not None:
        path = tmp_path / "cfg.json"
        path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
        argv += ["--config", str(path)]
    code = run(argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out else None), out.err


def _terms(*terms):
    return {"kernel": {"terms": [dict(zip(("b", "alpha", "r", "k"), t)) for t in terms]}}


# -- sigma ---------------------------------------------------------------------------

def test_sigma_catalog_distribution(capsys, tmp_path):
    code, rep, _ = _run(capsys, tmp_path, "sigma", _terms((1.0, 1.0, 0.0, 0.5)))
    assert code == 0
    (atom,) = rep["atoms"]
    assert atom["kind"] == "finite_part" and atom["coeff"] == pytest.approx(-0.28209479177387814, rel=1e-12)
    assert "sigma" not in rep


def test_sigma_tabulated_carleman(capsys, tmp_path):
    cfg = {"kernel": {"expression": "1/t", "singularity": -1, "tail_power": -1},
           "reference_sigma": {"expression": "1 + 0*lam"}}
    code, rep, _ = _run(capsys, tmp_path, "sigma", cfg)
    assert code == 0
    assert rep["comparison"]["max_interior_deviation"] < 1e-6
    assert len(rep["sigma"]) == 2048


def test_sigma_catalog_density_comparison(capsys, tmp_path):
    code, rep, _ = _run(capsys, tmp_path, "sigma", _terms((1.0, 0.0, 0.0, -0.5)))
    assert code == 0 and rep["comparison"]["max_interior_deviation"] < 1e-3


def test_malformed_json_is_config_error(capsys, tmp_path):
    code, rep, err = _run(capsys, tmp_path, "sigma", "{not json")
    assert code == 2 and rep is None and "malformed" in err


# -- counts and verify ----------------------------------------------------------------

@pytest.mark.parametrize("k", [1.5, 3.0, -0.5])
def test_counts_consistent(capsys, tmp_path, k):
    code, rep, _ = _run(capsys, tmp_path, "counts", _terms((1.0, 1.0, 0.0, k)))
    assert code == 0 and rep["verdict"] == "consistent"
    assert [r["n"] for r in rep["sections"]] == [32, 64, 128]


def test_counts_needs_catalog_kernel(capsys, tmp_path):
    code, _, err = _run(capsys, tmp_path, "counts", {"kernel": {"expression": "1/t"}})
    assert code == 2 and "catalog" in err


def test_verify_delta_kernel(capsys, tmp_path):
    code, rep, _ = _run(capsys, tmp_path, "verify", _terms((1.0, 0.8, 0.0, 0.0)))
    assert code == 0 and rep["pass"] and rep["max_error"] < 1e-12


def test_verify_failure_exits_numeric(capsys, tmp_path):
    cfg = {**_terms((1.0, 1.0, 0.0, 0.5)), "tolerance": 0.0}
    code, rep, _ = _run(capsys, tmp_path, "verify", cfg)
    assert code == 3 and rep is not None and not rep["pass"]


# -- moments, asymptotics, section -------------------------------------------------------

def test_moments_point_mass(capsys, tmp_path):
    cfg = {"moments": [0.3**n for n in range(64)], "bound": 1e-2}
    code, rep, _ = _run(capsys, tmp_path, "moments", cfg)
    assert code == 0 and rep["converged"]


def test_moments_hilbert_does_not_converge(capsys, tmp_path):
    cfg = {"moments": [1 / (n + 1) for n in range(64)], "bound": 1e-6}
    code, rep, _ = _run(capsys, tmp_path, "moments", cfg)
    assert code == 3 and not rep["converged"]


def test_moments_from_csv(capsys, tmp_path):
    csv = tmp_path / "q.csv"
    csv.write_text("n,q_n\n" + "".join(f"{n},{0.3**n!r}\n" for n in range(32)))
    code, rep, _ = _run(capsys, tmp_path, "moments", {"moments": {"csv": str(csv)}, "bound": 1e-2})
    assert code == 0 and rep["source"] == str(csv) and rep["n_moments"] == 32


def test_asymptotics_table(capsys, tmp_path):
    cfg = {"asymptotics": {"alpha": 0.5, "r": 0.0, "k": 0.5, "n": [100, 400]}}
    code, rep, _ = _run(capsys, tmp_path, "asymptotics", cfg)
    assert code == 0
    ratios = [row["ratio"] for row in rep["rows"]]
    assert abs(ratios[1] - 1) < abs(ratios[0] - 1) < 0.05


def test_section_from_kernel(capsys, tmp_path):
    code, rep, _ = _run(capsys, tmp_path, "section", _terms((1.0, 0.5, 0.0, -1.0)), "--section-n", "8")
    assert code == 0 and rep["n"] == 8 and (rep["n_plus"], rep["n_minus"]) == (8, 0)
    assert rep["q"][:3] == pytest.approx([1.0, 0.5, 1 / 3], rel=1e-13)


# -- config validation ---------------------------------------------------------------------

def test_unknown_key_rejected(capsys, tmp_path):
    code, _, err = _run(capsys, tmp_path, "counts", {**_terms((1.0, 1.0, 0.0, 1.5)), "kernal": {}})
    assert code == 2 and "kernal" in err


def test_expression_whitelist(capsys, tmp_path):
    with pytest.raises(ConfigError):
        parse_expression("__import__('os').getcwd()", "t")
    with pytest.raises(ConfigError):
        parse_expression("t.real", "t")
    code, _, _ = _run(capsys, tmp_path, "sigma", {"kernel": {"expression": "__import__('os')"}})
    assert code == 2
    f = parse_expression("exp(-t) * (t > 1)", "t")
    assert list(f([0.5, 2.0])) == pytest.approx([0.0, 0.1353352832366127])


def test_bad_thread_setting(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("HANKEL_SIGMA_THREADS", "many")
    code, _, err = _run(capsys, tmp_path, "counts", _terms((1.0, 1.0, 0.0, 1.5)))
    assert code == 2 and "HANKEL_SIGMA_THREADS" in err


def test_unknown_command():
    assert run(["plot"]) == 2


def test_output_is_deterministic(capsys, tmp_path):
    cfg = _terms((-1.0, 1.0, 0.0, 2.5), (1.0, 2.0, 0.0, 3.5))
    _run(capsys, tmp_path, "counts", cfg, "--out", str(tmp_path / "a.json"))
    _run(capsys, tmp_path, "counts", cfg, "--out", str(tmp_path / "b.json"))
    a, b = (tmp_path / "a.json").read_bytes(), (tmp_path / "b.json").read_bytes()
    assert a == b and json.loads(a)["command"] == "counts"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json", "b.json", "cfg.json"]


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"asymptotics": {"alpha": 1.0, "r": 0.0, "k": -0.5, "n": [10]}}))
    env = {**os.environ, "HANKEL_SIGMA_THREADS": "1"}
    proc = subprocess.run([sys.executable, "-m", "hankel_sigma.cli", "asymptotics", "--config", str(cfg)],
                          capture_output=True, text=True, env=env, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["rows"][0]["regime"] == "mu = 1"
