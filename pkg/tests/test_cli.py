import io

import numpy as np
import pytest

from wl1alsh.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(4)
    data = rng.uniform(0, 1, size=(200, 3))
    np.savetxt(tmp_path / "data.csv", data, delimiter=",")
    w = rng.uniform(-1, 1, size=(5, 3))
    q = rng.uniform(0, 1, size=(5, 3))
    np.savetxt(tmp_path / "queries.csv", np.hstack([w, q]), delimiter=",")
    return tmp_path


def _build(files, *extra):
    return run(
        "build", "--data", str(files / "data.csv"), "--variant", "theta",
        "--ml", "0", "--mu", "1", "--t", "16", "--out", str(files / "idx.bin"), *extra,
    )


class TestBuildAndQuery:
    def test_build_reports_parameters(self, files):
        code, out, _ = _build(files, "--p1", "0.9", "--p2", "0.5", "--seed", "3")
        assert code == 0
        kv = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert kv["n"] == "200" and kv["d"] == "3" and kv["M"] == "16"
        assert (kv["K"], kv["L"]) == ("8", "3")
        assert float(kv["rho"]) == pytest.approx(0.152003, abs=1e-6)
        assert kv["variant"] == "theta" and kv["seed"] == "3"

    def test_random_seed_is_reported(self, files):
        code, out, err = _build(files, "--k", "2", "--L", "3")
        assert code == 0
        assert "seed=" in err

    def test_query_is_reproducible(self, files):
        outs = []
        for _ in range(2):
            _build(files, "--k", "2", "--L", "8", "--seed", "9")
            code, out, _ = run("query", "--index", str(files / "idx.bin"), "--queries", str(files / "queries.csv"), "--top1", "--budget", "50")
            assert code == 0
            outs.append(out)
        assert outs[0] == outs[1]
        assert len(outs[0].strip().splitlines()) == 5

    def test_rnn_query(self, files):
        _build(files, "--k", "2", "--L", "8", "--seed", "9")
        code, out, _ = run("query", "--index", str(files / "idx.bin"), "--queries", str(files / "queries.csv"), "--r1", "0.1", "--r2", "2.0")
        assert code == 0
        for line in out.strip().splitlines():
            assert line == "NONE" or float(line.split(",")[1]) <= 2.0

    def test_oracle_worked_example(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,0\n3,3\n")
        (tmp_path / "q.csv").write_text("1,1,1,1\n-1,-1,1,1\n1,1,3,3\n")
        code, out, _ = run("oracle", "--data", str(tmp_path / "d.csv"), "--queries", str(tmp_path / "q.csv"))
        assert code == 0
        assert out.splitlines() == ["0,2.0", "1,-4.0", "1,0.0"]

    def test_top1_full_budget_matches_oracle(self, tmp_path):
        rng = np.random.default_rng(8)
        np.savetxt(tmp_path / "d.csv", rng.uniform(0, 1, size=(30, 2)), delimiter=",")
        np.savetxt(tmp_path / "q.csv", np.hstack([rng.uniform(-1, 1, (6, 2)), rng.uniform(0, 1, (6, 2))]), delimiter=",")
        run("build", "--data", str(tmp_path / "d.csv"), "--variant", "theta", "--ml", "0", "--mu", "1",
            "--t", "8", "--k", "1", "--L", "200", "--seed", "1", "--out", str(tmp_path / "i"))
        _, top1, _ = run("query", "--index", str(tmp_path / "i"), "--queries", str(tmp_path / "q.csv"), "--top1", "--budget", "30")
        _, exact, _ = run("oracle", "--data", str(tmp_path / "d.csv"), "--queries", str(tmp_path / "q.csv"))
        assert top1 == exact

    def test_empty_query_file(self, files):
        _build(files, "--k", "1", "--L", "1", "--seed", "1")
        (files / "none.csv").write_text("\n")
        code, _, err = run("query", "--index", str(files / "idx.bin"), "--queries", str(files / "none.csv"), "--top1", "--budget", "5")
        assert code == 2 and "empty" in err

    def test_query_dimension_mismatch(self, files):
        _build(files, "--k", "1", "--L", "1", "--seed", "1")
        (files / "q2.csv").write_text("1,1,0.5,0.5\n")
        code, _, _ = run("query", "--index", str(files / "idx.bin"), "--queries", str(files / "q2.csv"), "--top1", "--budget", "5")
        assert code == 2

    def test_oracle_two_points(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,0\n3,4\n")
        (tmp_path / "q.csv").write_text("1,1,2.5,3.5\n-1,-1,0,0\n")
        code, out, _ = run("oracle", "--data", str(tmp_path / "d.csv"), "--queries", str(tmp_path / "q.csv"))
        assert code == 0
        assert out.splitlines() == ["1,1.0", "1,-7.0"]


class TestProbe:
    def test_theory_table(self):
        code, out, _ = run("probe", "--variant", "theta", "--m", "4", "--d", "3", "--weights", "1,1,1", "--rmin", "0", "--rmax", "12", "--steps", "4")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "r,theoretical_prob"
        r, p = map(float, lines[2].split(","))
        assert r == 4.0
        r, p = map(float, lines[3].split(","))
        assert r == 8.0 and p == pytest.approx(0.608173, abs=1e-6)

    def test_simulated_table(self):
        code, out, _ = run("probe", "--variant", "l2", "--window", "4", "--m", "4", "--d", "3", "--weights", "1,1,1", "--rmin", "0", "--rmax", "8", "--steps", "3", "--simulate", "2000", "--seed", "1")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "r,theoretical_prob,empirical_prob"
        for line in lines[1:]:
            _, theory, emp = map(float, line.split(","))
            assert abs(theory - emp) < 0.05


    def test_zero_weights_rejected(self):
        code, _, _ = run("probe", "--variant", "theta", "--m", "4", "--d", "2", "--weights", "0,0", "--rmin", "0", "--rmax", "1", "--steps", "2")
        assert code == 2

    def test_columns_nonincreasing(self):
        for extra in (["--variant", "theta"], ["--variant", "l2"]):
            code, out, _ = run("probe", *extra, "--m", "8", "--d", "3", "--weights", "1,-0.5,2", "--rmin", "-4", "--rmax", "24", "--steps", "30")
            assert code == 0
            ps = [float(line.split(",")[1]) for line in out.strip().splitlines()[1:]]
            assert all(a >= b for a, b in zip(ps, ps[1:]))


class TestErrors:
    def test_missing_required_flag(self, files):
        with pytest.raises(SystemExit) as exc:
            run("build", "--data", str(files / "data.csv"), "--variant", "theta", "--ml", "0", "--mu", "1", "--out", "x")
        assert exc.value.code == 2

    def test_m_over_cap(self, files):
        code, _, err = _build(files, "--t", "100000", "--k", "1", "--L", "1")
        assert code == 2 and "smaller t" in err

    def test_both_parameter_sources(self, files):
        code, _, err = _build(files, "--k", "1", "--L", "1", "--p1", "0.9", "--p2", "0.5")
        assert code == 2

    def test_r1_not_below_r2(self, files):
        _build(files, "--k", "1", "--L", "1", "--seed", "1")
        code, _, err = run("query", "--index", str(files / "idx.bin"), "--queries", str(files / "queries.csv"), "--r1", "2", "--r2", "1")
        assert code == 2 and "--r1" in err

    def test_empty_data(self, tmp_path):
        (tmp_path / "empty.csv").write_text("")
        code, _, err = run("build", "--data", str(tmp_path / "empty.csv"), "--variant", "theta", "--ml", "0", "--mu", "1", "--t", "4", "--k", "1", "--L", "1", "--out", str(tmp_path / "i"))
        assert code == 2 and "empty" in err

    def test_malformed_row_reports_line(self, tmp_path):
        (tmp_path / "d.csv").write_text("0,0\n1,x\n")
        (tmp_path / "q.csv").write_text("1,1,0,0\n")
        code, _, err = run("oracle", "--data", str(tmp_path / "d.csv"), "--queries", str(tmp_path / "q.csv"))
        assert code == 2 and "line 2" in err

    def test_out_of_box_data(self, files):
        code, _, err = run("build", "--data", str(files / "data.csv"), "--variant", "theta", "--ml", "0.5", "--mu", "1", "--t", "8", "--k", "1", "--L", "1", "--out", str(files / "i"))
        assert code == 2 and "row" in err

    def test_missing_file_is_io_error(self, tmp_path):
        code, _, _ = run("oracle", "--data", str(tmp_path / "nope.csv"), "--queries", str(tmp_path / "q.csv"))
        assert code == 1

    def test_corrupt_index(self, files):
        (files / "bad.bin").write_bytes(b"nonsense")
        code, _, err = run("query", "--index", str(files / "bad.bin"), "--queries", str(files / "queries.csv"), "--top1", "--budget", "5")
        assert code == 2


def test_bench_small(tmp_path):
    code, out, _ = run("bench", "--n", "300", "--d", "4", "--queries", "5", "--k", "1", "--L", "20", "--seed", "2", "--out", str(tmp_path / "m.csv"))
    assert code == 0
    text = (tmp_path / "m.csv").read_text()
    assert text.startswith("metric,name,value")
    assert "recall_at_1" in text
