import csv
import io
import json

import numpy as np
import pytest

from permround.cli import (
    EXIT_INVALID,
    EXIT_OK,
    EXIT_PARSE,
    SCALING_COLUMNS,
    ConfigError,
    ExperimentConfig,
    main,
    render_table,
)
from permround.core import as_orthogonal, format_matrix, perm_to_matrix, Permutation, read_matrix
from permround.qap import counterexample, format_instance


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def matfile(tmp_path):
    def write(M, fmt="text"):
        p = tmp_path / f"m{np.random.default_rng().integers(1 << 30)}.txt"
        p.write_text(format_matrix(np.asarray(M, dtype=float), fmt))
        return p
    return write


def test_haar_writes_orthogonal(tmp_path, capsys):
    out = tmp_path / "u.txt"
    assert run(capsys, "haar", 3, "--seed", 5, "--out", out)[0] == EXIT_OK
    U = read_matrix(out)
    assert U.shape == (3, 3)
    as_orthogonal(U)
    code, text, _ = run(capsys, "haar", 3, "--seed", 5, "--format", "json")
    assert code == EXIT_OK and np.array_equal(np.array(json.loads(text)["rows"]), U)


def test_round_identity(matfile, capsys):
    code, text, _ = run(capsys, "round", matfile(np.eye(4)), "--samples", 5)
    rows = read_csv(text)
    assert code == EXIT_OK and len(rows) == 5
    assert [r["sample_index"] for r in rows] == ["0", "1", "2", "3", "4"]
    assert all(r["permutation"] == "1 2 3 4" for r in rows)
    assert all(float(r["residual_norm"]) == 0.0 for r in rows)


def test_round_permutation_matrix(matfile, capsys):
    P = perm_to_matrix(Permutation.from_one_line("3 1 4 2"))
    code, text, _ = run(capsys, "round", matfile(P, "json"), "--samples", 20, "--seed", 3)
    rows = read_csv(text)
    assert code == EXIT_OK
    assert {r["permutation"] for r in rows} == {"3 1 4 2"}


def test_round_haar_residuals_small(tmp_path, matfile, capsys):
    u = tmp_path / "u.txt"
    run(capsys, "haar", 64, "--seed", 1, "--out", u)
    code, text, _ = run(capsys, "round", u, "--samples", 50, "--format", "json")
    rows = json.loads(text)
    assert code == EXIT_OK and len(rows) == 50
    assert max(r["residual_norm"] for r in rows) < 0.5 * np.sqrt(64)


def test_round_errors(tmp_path, matfile, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2\n1 0\n0\n")
    assert run(capsys, "round", bad)[0] == EXIT_PARSE
    assert run(capsys, "round", tmp_path / "missing.txt")[0] == EXIT_PARSE
    code, _, err = run(capsys, "round", matfile([[1.0, 1.0], [0.0, 1.0]]))
    assert code == EXIT_INVALID and "orthogonal" in err


def test_approximate_permutation(matfile, capsys):
    P = perm_to_matrix(Permutation.from_one_line("2 4 1 3"))
    code, text, _ = run(capsys, "approximate", matfile(P), "--samples", 100_000, "--seed", 2)
    payload = json.loads(text)
    assert code == EXIT_OK
    assert payload["error_report"]["linf"] <= 0.05
    assert payload["approximation"]["perm_counts"] == {"2 4 1 3": 100_000} or len(payload["approximation"]["perm_counts"]) == 1
    assert payload["error_report"]["trace_probability_deviation"] < 0.05


def test_approximate_one_dimensional(matfile, capsys):
    code, text, _ = run(capsys, "approximate", matfile([[1.0]]), "--samples", 10_000)
    payload = json.loads(text)
    assert code == EXIT_OK
    assert abs(payload["approximation"]["A_hat"][0][0] - 1.0) < 0.05


def test_approximate_json_roundtrip(matfile, capsys):
    from permround.nconv import NconvApprox
    code, text, _ = run(capsys, "approximate", matfile(np.eye(3)), "--samples", 500, "--mirrored")
    approx = NconvApprox.from_dict(json.loads(text)["approximation"])
    assert approx.mirrored and approx.n == 3 and approx.sample_count == 500


def test_scaling_shape_and_determinism(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# small run\nseed = 11\nn_values = 4, 8, 16\nsample_counts = 2000\nrepetitions = 2\n")
    code, a, _ = run(capsys, "scaling", cfg)
    rows = read_csv(a)
    assert code == EXIT_OK and len(rows) == 6
    assert list(rows[0]) == SCALING_COLUMNS
    assert run(capsys, "scaling", cfg)[1] == a
    code, b, _ = run(capsys, "scaling", cfg, "--seed", 22)
    other = read_csv(b)
    assert len(other) == 6 and b != a
    assert [r["n"] for r in other] == [r["n"] for r in rows]


def test_scaling_json_output(tmp_path, capsys):
    out = tmp_path / "res.json"
    code, _, _ = run(capsys, "scaling", "--n-values", "4", "--sample-counts", "1000", "--format", "json", "--out", out)
    rows = json.loads(out.read_text())
    assert code == EXIT_OK and len(rows) == 1 and set(rows[0]) == set(SCALING_COLUMNS)


def test_scaling_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n_values = 4\nfrobnicate = 1\n")
    assert run(capsys, "scaling", cfg)[0] == EXIT_PARSE
    cfg.write_text("n_values = 4\nrepetitions = 0\n")
    assert run(capsys, "scaling", cfg)[0] == EXIT_PARSE


def test_config_parse_and_validate():
    cfg = ExperimentConfig.parse("seed=3\nn_values = 8,16 # two sizes\noutput_format = json\n")
    assert cfg.seed == 3 and cfg.n_values == [8, 16] and cfg.output_format == "json"
    cfg.validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.parse("seed\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.parse("seed = x\n")
    with pytest.raises(ConfigError):
        ExperimentConfig(n_values=[]).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(output_format="xml").validate()


def test_concentration_default_grid(capsys):
    code, text, _ = run(capsys, "concentration", "--seed", 4)
    rows = read_csv(text)
    assert code == EXIT_OK and rows
    for r in rows:
        assert r["passes"] == "true"
        b = min(float(r["bound"]), 1.0)  # the summed two-sided bound can exceed 1
        sd = np.sqrt(b * (1 - b) / int(r["trials"]))
        assert float(r["empirical"]) <= float(r["bound"]) + 3 * sd


def test_qap_counterexample(tmp_path, capsys):
    f = tmp_path / "inst.dat"
    f.write_text(format_instance(counterexample(2)))
    code, text, _ = run(capsys, "qap", f, "--samples", 100)
    res = json.loads(text)
    assert code == EXIT_OK
    assert res["lower_bound"] == pytest.approx(-8.0, abs=1e-8)
    assert res["best_value"] == 0.0


def test_qap_asymmetric_rejected(tmp_path, capsys):
    f = tmp_path / "inst.json"
    f.write_text(json.dumps({"n": 2, "A": [[0, 1], [0, 0]], "B": [[1, 0], [0, 1]]}))
    assert run(capsys, "qap", f)[0] == EXIT_INVALID


def test_render_table_roundtrip():
    rows = [{"a": 1, "b": 0.1 + 0.2, "c": True}, {"a": 2, "b": 1e-300, "c": False}]
    text = render_table(rows, ["a", "b", "c"], "csv")
    back = read_csv(text)
    assert [float(r["b"]) for r in back] == [0.1 + 0.2, 1e-300]
    assert [r["c"] for r in back] == ["true", "false"]
    assert json.loads(render_table(rows, ["a", "b", "c"], "json")) == rows
