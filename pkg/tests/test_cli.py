import hashlib
import json

import pytest

from afdxsim.cli import main, resolve_seed, UsageError
from afdxsim.generators import FMS_CSV


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def fms_csv(tmp_path):
    p = tmp_path / "fms.csv"
    p.write_text(FMS_CSV)
    return p


class TestValidate:
    def test_fms(self, fms_csv, capsys):
        assert main(["validate", "--topology", str(fms_csv)]) == 0
        assert "12 VLs checked, 0 violation(s)" in capsys.readouterr().out

    def test_bad_bag(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text('vlid,src,dst,bag,size\n1,1,"2",3,75\n')
        assert main(["validate", "--topology", str(p)]) == 1
        out = capsys.readouterr().out
        assert "row 2: VL 1: bag: bag not a power-of-two in 1..128" in out and "1 violation(s)" in out

    def test_missing_file(self, tmp_path):
        assert main(["validate", "--topology", str(tmp_path / "nope.csv")]) == 2

    def test_json(self, tmp_path):
        out = tmp_path / "fms.json"
        assert main(["generate", "--template", "fms", "--out", str(out)]) == 0
        assert main(["validate", "--topology", str(out)]) == 0


class TestGenerate:
    def test_random(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["generate", "--random", "10", "--seed", "7", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["vls"]) == 10 and len(doc["switches"]) == 1

    def test_template_copies(self, fms_csv, tmp_path):
        out = tmp_path / "two.csv"
        assert main(["generate", "--template", str(fms_csv), "--copies", "2", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 25

    def test_usage_errors(self, fms_csv, capsys):
        assert main(["generate", "--random", "0"]) == 2
        assert main(["generate", "--template", str(fms_csv), "--copies", "5500"]) == 2
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--random", "3", "--template", str(fms_csv)])
        assert exc.value.code == 2


class TestSimulateAnalyze:
    def test_pipeline(self, tmp_path, capsys):
        trace = tmp_path / "t.csv"
        assert main(["simulate", "--topology", "fms", "--model", "dvl", "--duration", "2", "--trace", str(trace),
                     "--report", str(tmp_path / "r.json")]) == 0
        out = capsys.readouterr().out
        assert out.startswith("seed: 0\n")
        assert json.loads((tmp_path / "r.json").read_text())["paths"][0]["vl_id"] == 1
        cdf = tmp_path / "cdf"
        assert main(["analyze", "--trace", str(trace), "--topology", "fms", "--trim", "10", "--duration", "2",
                     "--cdf", str(cdf), "--json", str(tmp_path / "a.json"), "--flagged", str(tmp_path / "f.csv")]) == 0
        out = capsys.readouterr().out
        assert "above WCTT: 0" in out
        assert len(list(cdf.iterdir())) == 16
        assert (tmp_path / "f.csv").read_text().splitlines() == ["time_ns,event,vl_id,src,dst,seq,latency_ns,reason"]

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert main(["simulate", "--topology", "fms", "--model", "svl", "--duration", "1", "--seed", "3",
                         "--trace", str(p)]) == 0
        assert sha(a) == sha(b)

    def test_speed_doubles(self, tmp_path):
        counts = []
        for speed in ("1", "2"):
            p = tmp_path / f"s{speed}.csv"
            main(["simulate", "--topology", "fms", "--duration", "1", "--speed", speed, "--trace", str(p)])
            counts.append(sum(1 for line in p.read_text().splitlines() if ",emitted," in line))
        assert abs(counts[1] - 2 * counts[0]) <= 12

    def test_missing_bounds(self, fms_csv, capsys):
        assert main(["simulate", "--topology", str(fms_csv), "--duration", "1"]) == 2
        assert "VL 1" in capsys.readouterr().err

    def test_empty_trace(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        assert main(["analyze", "--trace", str(p)]) == 1
        p.write_text("time_ns,event,vl_id,src,dst,seq,latency_ns\n")
        assert main(["analyze", "--trace", str(p)]) == 1

    def test_malformed_rows(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("time_ns,event,vl_id,src,dst,seq,latency_ns\n0,emitted,1,1,,0,\nx,bogus,1,1,,0,\n")
        assert main(["analyze", "--trace", str(p)]) == 1
        assert "line 3" in capsys.readouterr().err

    def test_bad_duration(self):
        assert main(["simulate", "--topology", "fms", "--duration", "-1"]) == 2


class TestPolicingCheck:
    def test_arrivals(self, capsys):
        assert main(["policing-check", "--bag", "8", "--jmax", "2000", "--smax", "100", "--arrivals", "0,3,7,14"]) == 0
        out = capsys.readouterr().out
        assert "decisions: A,R,A,A\nmatch" in out

    def test_random(self, capsys):
        assert main(["policing-check", "--random", "2000", "--seed", "1"]) == 0
        assert "0 mismatches" in capsys.readouterr().out

    def test_unsound(self):
        assert main(["policing-check", "--bag", "8", "--jmax", "9000", "--smax", "100", "--arrivals", "0"]) == 2

    def test_partial_params(self):
        assert main(["policing-check", "--bag", "8", "--random", "5"]) == 2


class TestSeed:
    def test_default_env_and_random(self, monkeypatch):
        monkeypatch.delenv("AFDX_SIM_SEED", raising=False)
        assert resolve_seed(None) == 0
        monkeypatch.setenv("AFDX_SIM_SEED", "42")
        assert resolve_seed(None) == 42
        assert resolve_seed("7") == 7
        assert 0 <= resolve_seed("random") < 2**63
        with pytest.raises(UsageError):
            resolve_seed("abc")
