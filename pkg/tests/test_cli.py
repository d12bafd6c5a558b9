import json
import subprocess
import sys

import pytest

from priorlens.cli import main, parse_int_list


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    return [l for l in text.splitlines() if l and not l.startswith("#")]


class TestSample:
    def test_outputs(self, tmp_path, capsys):
        out = tmp_path / "c"
        code, _, _ = run(["sample", "--n", "5", "--samples", "20000", "--seed", "1", "--out", str(out)], capsys)
        assert code == 0
        meta = json.loads((out / "campaign.json").read_text())
        assert meta["seed"] == 1 and meta["samples"] == 20000 and meta["version"]
        th = (out / "thist.csv").read_text()
        assert "# seed=1" in th and "# shards=1" in th and "# spec=" in th
        rows = data_rows(th)
        assert rows[0] == "t,count,probability" and len(rows) == 34
        assert data_rows((out / "rank.csv").read_text())[0] == "rank,probability,pattern"
        assert data_rows((out / "patterns.csv").read_text())[0] == "pattern,t,H,K_LZ,probability"

    def test_byte_identical(self, tmp_path, capsys):
        args = ["sample", "--arch", "mlp", "--widths", "4,8,1", "--act", "relu", "--sigma-b", "1",
                "--samples", "5000", "--seed", "3", "--shards", "2"]
        run(args + ["--out", str(tmp_path / "a")], capsys)
        run(args + ["--out", str(tmp_path / "b")], capsys)
        for f in ("campaign.json", "thist.csv", "rank.csv", "patterns.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_missing_seed(self, tmp_path, capsys):
        code, _, err = run(["sample", "--n", "3", "--samples", "10", "--out", str(tmp_path)], capsys)
        assert code == 2 and "--seed" in err

    def test_bad_flag(self, capsys):
        assert run(["sample", "--bogus"], capsys)[0] == 2
        assert run(["analyze", "nothing"], capsys)[0] == 2

    def test_mlp_needs_widths(self, tmp_path, capsys):
        code, _, err = run(["sample", "--arch", "mlp", "--samples", "10", "--seed", "1",
                            "--out", str(tmp_path)], capsys)
        assert code == 2 and "widths" in err

    def test_io_error(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code, _, _ = run(["sample", "--n", "3", "--samples", "10", "--seed", "1",
                          "--out", str(blocker / "sub")], capsys)
        assert code == 3

    def test_config_overridden(self, tmp_path, capsys):
        cfg = tmp_path / "cfg"
        cfg.write_text("# campaign\nn=4\nsamples=1000\nseed=5\n")
        out = tmp_path / "o"
        code, _, _ = run(["--config", str(cfg), "sample", "--samples", "300", "--out", str(out)], capsys)
        assert code == 0
        meta = json.loads((out / "campaign.json").read_text())
        assert meta["samples"] == 300 and meta["seed"] == 5 and meta["spec"]["widths"] == [4, 1]

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg"
        cfg.write_text("no equals sign\n")
        assert run(["--config", str(cfg), "sample"], capsys)[0] == 2
        assert run(["--config", str(tmp_path / "missing"), "sample"], capsys)[0] == 3


class TestAnalyze:
    def test_conditions(self, capsys):
        code, out, _ = run(["analyze", "conditions", "--n", "5", "--t", "4"], capsys)
        assert code == 0
        assert data_rows(out) == ["a4<a1+a2", "  ---+", "a4>a1+a2", "  a3<a1+a2", "    ++--",
                                  "  a3>a1+a2", "    --+-"]

    def test_conditions_json(self, capsys):
        code, out, _ = run(["analyze", "conditions", "--n", "5", "--t", "5", "--format", "json"], capsys)
        assert json.loads(out)["tree"]["children"][0]["signature"] == "----+"

    def test_gp_depth(self, capsys):
        code, out, _ = run(["analyze", "gp-depth", "--n", "5", "--layers", "0..3", "--mc-samples", "20000",
                            "--seed", "2"], capsys)
        assert code == 0
        rows = data_rows(out)[1:]
        H = [float(r.split(",")[1]) for r in rows]
        assert len(H) == 4 and all(a > b for a, b in zip(H, H[1:]))

    def test_gp_depth_needs_seed(self, capsys):
        assert run(["analyze", "gp-depth", "--n", "3"], capsys)[0] == 2

    def test_laws(self, capsys):
        code, out, _ = run(["analyze", "laws", "--n", "3", "--law", "infinitesimal-bias"], capsys)
        rows = data_rows(out)
        assert rows[1] == "0,0.0625" and rows[2] == "1,0.125" and rows[-1] == "8,0.0625"

    def test_zipf(self, tmp_path, capsys):
        f = tmp_path / "rank.csv"
        f.write_text("# synthetic\nrank,probability\n" + "".join(
            f"{r},{1 / (4.605170185988092 * r):.12g}\n" for r in range(1, 100)))
        code, out, _ = run(["analyze", "zipf", "--in", str(f)], capsys)
        d = json.loads(out)
        assert code == 0 and d["slope"] == pytest.approx(-1, abs=0.01) and d["N_O"] == pytest.approx(100, abs=5)

    def test_zipf_missing_file(self, tmp_path, capsys):
        assert run(["analyze", "zipf", "--in", str(tmp_path / "none.csv")], capsys)[0] == 3

    def test_oracle(self, tmp_path, capsys):
        pats = tmp_path / "p.hex"
        code, out, _ = run(["analyze", "oracle", "--n", "3", "--patterns-out", str(pats)], capsys)
        assert code == 0 and "# total=32" in out
        assert data_rows(out)[1:] == ["0,1", "1,3", "2,6", "3,6", "4,6", "5,6", "6,3", "7,1"]
        code, out, _ = run(["analyze", "expressivity", "--n", "3", "--in", str(pats), "--layers", "2"], capsys)
        assert code == 0 and "32 verified, 0 failed" in out

    def test_expressivity_out(self, tmp_path, capsys):
        o = tmp_path / "nets.json"
        code, _, _ = run(["analyze", "expressivity", "--n", "2", "--pattern", "0110", "--out", str(o)], capsys)
        d = json.loads(o.read_text())
        assert code == 0 and d["networks"][0]["verified"] and d["networks"][0]["widths"] == [2, 2, 1]

    def test_runtime_error(self, capsys):
        code, _, err = run(["analyze", "conditions", "--n", "3", "--t", "9"], capsys)
        assert code == 1 and "error" in err

    def test_int_list(self):
        assert parse_int_list("0..3,6") == [0, 1, 2, 3, 6]


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "priorlens.cli", "analyze", "laws", "--n", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "0,0.5" in r.stdout
