import json

import numpy as np
import pytest

from translasso.cli import main, read_data
from translasso.datagen import default_truth, sample_problem


@pytest.fixture
def data_file(tmp_path):
    prob = sample_problem(default_truth(), 60, 3)
    path = tmp_path / "data.csv"
    np.savetxt(path, np.column_stack([prob.response, prob.design]), delimiter=",", fmt="%.17g")
    init = tmp_path / "init.txt"
    tilde = np.linalg.lstsq(prob.design, prob.response, rcond=None)[0] + 0.05
    np.savetxt(init, tilde, fmt="%.17g")
    return prob, path, init, tilde


def parse_report(text):
    out = {}
    for line in text.splitlines():
        key, _, value = line.partition(": ")
        out[key] = value
    return out


class TestFit:
    def test_lambda_zero_square_is_ols(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((4, 4))
        y = rng.standard_normal(4)
        path = tmp_path / "sq.csv"
        np.savetxt(path, np.column_stack([y, X]), delimiter=",", fmt="%.17g")
        assert main(["fit", str(path), "--lambda", "0"]) == 0
        beta = np.array(parse_report(capsys.readouterr().out)["beta_hat"].split(), dtype=float)
        assert np.max(np.abs(beta - np.linalg.solve(X, y))) < 1e-6

    def test_kappa_auto_anchors(self, data_file, capsys, tmp_path):
        prob, path, init, tilde = data_file
        out = tmp_path / "beta.txt"
        code = main(["fit", str(path), "--method", "transfer", "--alpha", "0.75", "--kappa", "auto",
                     "--initial", str(init), "--out", str(out)])
        assert code == 0
        beta = np.loadtxt(out)
        assert np.all((beta == 0) | (beta == tilde))
        rep = parse_report(capsys.readouterr().out)
        assert float(rep["kkt_residual"]) <= 1e-8 and rep["converged"] == "true"

    def test_kappa_auto_equal_mixing(self, data_file, capsys):
        prob, path, init, tilde = data_file
        assert main(["fit", str(path), "--method", "transfer", "--alpha", "0.5", "--kappa", "auto",
                     "--initial", str(init)]) == 0
        beta = np.array(parse_report(capsys.readouterr().out)["beta_hat"].split(), dtype=float)
        lo, hi = np.minimum(0, tilde), np.maximum(0, tilde)
        assert np.all((beta >= lo) & (beta <= hi))

    def test_header_and_sets(self, tmp_path, capsys):
        path = tmp_path / "h.csv"
        path.write_text("y,x1,x2\n1,1,0\n2,0,1\n3,1,1\n")
        assert main(["fit", str(path), "--header", "--lambda", "0"]) == 0
        rep = parse_report(capsys.readouterr().out)
        assert rep["active_set"] == "0 1" and rep["anchored_set"] == "(empty)"

    def test_missing_initial(self, data_file, capsys):
        _, path, _, _ = data_file
        assert main(["fit", str(path), "--method", "adaptive"]) == 1
        assert "--initial" in capsys.readouterr().err

    def test_unreadable_initial(self, data_file, capsys):
        _, path, _, _ = data_file
        assert main(["fit", str(path), "--method", "adaptive", "--initial", "/nonexistent"]) == 1

    @pytest.mark.parametrize("text,where", [("1,2\n3,x\n", "row 2, column 2"),
                                            ("1,2,3\n4,5\n", "row 2"),
                                            ("", "no data")])
    def test_malformed_csv(self, tmp_path, capsys, text, where):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        assert main(["fit", str(path)]) == 1
        assert where in capsys.readouterr().err

    def test_nonconvergence_exit_code(self, data_file, monkeypatch):
        import translasso.cli as cli
        from translasso.solver import fit as real_fit
        _, path, _, _ = data_file
        monkeypatch.setattr(cli, "fit", lambda prob, pen: real_fit(prob, pen, max_iter=1))
        assert main(["fit", str(path), "--lambda", "0.001"]) == 2

    def test_read_data(self, data_file):
        prob, path, _, _ = data_file
        got = read_data(path)
        assert np.array_equal(got.design, prob.design)


class TestStudy:
    def test_convergence_outputs(self, tmp_path):
        out = tmp_path / "run"
        assert main(["study", "convergence", "--seed", "1", "--replicates", "2", "--out", str(out)]) == 0
        lines = (out / "convergence.csv").read_text().splitlines()
        assert lines[0] == "study,method,region,n,metric,mean,stderr,replicates,nonconverged"
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["seed"] == 1 and manifest["config"]["replicates"] == 2
        assert manifest["finished"] and manifest["outputs"] == [str(out / "convergence.csv")]

    def test_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert main(["study", "convergence", "--seed", "1", "--replicates", "2",
                         "--out", str(tmp_path / d)]) == 0
        assert (tmp_path / "a/convergence.csv").read_bytes() == (tmp_path / "b/convergence.csv").read_bytes()

    def test_phase_diagram_full_grid(self, tmp_path):
        assert main(["study", "phase-diagram", "--method", "transfer", "--replicates", "1",
                     "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "phase_diagram.csv").read_text().splitlines()[1:]
        cells = {tuple(r.split(",")[2:4]) for r in rows}
        assert len(cells) == 289

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("study.convergence.n = 20,50\nreplicates = 1\n")
        assert main(["study", "convergence", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        text = (tmp_path / "convergence.csv").read_text()
        assert ",500," not in text

    def test_unknown_study(self, capsys, tmp_path):
        assert main(["study", "nope", "--out", str(tmp_path)]) == 1
        assert "phase-diagram" in capsys.readouterr().err

    def test_bad_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("study.convergence.bogus = 1\n")
        assert main(["study", "convergence", "--config", str(cfg), "--out", str(tmp_path)]) == 1
        assert "valid keys" in capsys.readouterr().err

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["fit"])
        assert exc.value.code == 1
