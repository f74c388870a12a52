"""
Тесты командной строки: подкоманды, JSON в stdout и коды выхода.
"""
import json

import pytest

from src import config
from src.backends import CbcBackend, SolverStatus, register_backend
from src.cli import main


@pytest.fixture(autouse=True)
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "OUTPUT_DIR", tmp_path / "runs")
    return tmp_path / "runs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_solve_toy(capsys, out_dir):
    """Тест: solve на встроенном экземпляре"""
    code, payload = run(capsys, "solve")
    assert code == 0
    assert payload["objective"] == pytest.approx(132.0)
    assert payload["verified"] is True
    assert payload["open_arcs"] == 2
    assert payload["adoption"]["adopting_riders"] == 4
    assert (out_dir / "report.json").exists()
    assert (out_dir / "adoption.csv").exists()
    assert (out_dir / "solution.json").exists()


def test_solve_cpath_with_geojson(capsys, tmp_path):
    code, payload = run(capsys, "solve", "--formulation", "cpath", "--geojson", "--out-dir", str(tmp_path / "c"))
    assert code == 0
    assert payload["method"] == "C-PATH"
    assert payload["objective"] == pytest.approx(132.0)
    geojson = json.loads((tmp_path / "c" / "design.geojson").read_text(encoding="utf-8"))
    assert len(geojson["features"]) == 5


def test_solve_lazy_lex(capsys):
    code, payload = run(capsys, "solve", "--lazy", "--follower", "lex")
    assert code == 0
    assert payload["method"] == "lazy"
    assert payload["follower_mode"] == "lex"
    assert payload["objective"] == pytest.approx(132.0)
    assert len(payload["lazy_iterations"]) >= 1


def test_missing_instance(capsys, tmp_path):
    code, payload = run(capsys, "solve", "--instance", str(tmp_path / "missing.json"))
    assert code == 2
    assert payload is None


def test_bad_preprocess_step(capsys):
    code, _ = run(capsys, "solve", "--no-preprocess", "bogus")
    assert code == 2


def test_lazy_with_cpath_is_rejected(capsys):
    code, _ = run(capsys, "solve", "--lazy", "--formulation", "cpath")
    assert code == 2


def test_null_solver(capsys, out_dir):
    code, payload = run(capsys, "solve", "--solver", "null")
    assert code == 4
    assert payload is None
    assert (out_dir / "model.lp").exists()


class LimitedCbcBackend(CbcBackend):
    """CBC, который сообщает об остановке по лимиту при найденном решении."""

    def solve(self, model, limits):
        result = super().solve(model, limits)
        result.status = SolverStatus.LIMIT
        return result


register_backend("cbc_limited")(LimitedCbcBackend)


def test_solve_limit_with_incumbent(capsys, out_dir):
    code, payload = run(capsys, "solve", "--solver", "cbc_limited")
    assert code == 4
    assert payload["status"] == "limit"
    assert payload["objective"] == pytest.approx(132.0)
    assert (out_dir / "report.json").exists()


def test_oracle_toy(capsys):
    code, payload = run(capsys, "oracle", "--cross-check")
    assert code == 0
    assert payload["objective"] == pytest.approx(132.0)
    assert payload["method"] == "oracle"


def test_oracle_resource_guard(capsys, tmp_path):
    path = tmp_path / "big.json"
    code, _ = run(capsys, "generate", "--out", str(path), "--n-hubs", "5", "--n-candidate-arcs", "20",
                  "--n-fixed-arcs", "0")
    assert code == 0
    code, payload = run(capsys, "oracle", "--instance", str(path))
    assert code == 3
    assert payload is None


def test_generate(capsys, tmp_path):
    path = tmp_path / "gen" / "inst.json"
    code, payload = run(capsys, "generate", "--out", str(path), "--seed", "5", "--name", "demo")
    assert code == 0
    assert payload == {"instance": "demo", "path": str(path), "stops": 12, "arcs": 8, "trips": 12}
    first = path.read_bytes()
    run(capsys, "generate", "--out", str(path), "--seed", "5", "--name", "demo")
    assert path.read_bytes() == first
    code, payload = run(capsys, "generate", "--out", str(path), "--n-fixed-arcs", "3")
    assert code == 2


def test_compare(capsys, out_dir):
    code, payload = run(capsys, "compare")
    assert code == 0
    assert payload["all_agree"] is True
    assert sorted(row["method"] for row in payload["table"]) == ["cpath", "lazy", "oracle", "ppath"]
    assert (out_dir / "compare.csv").exists()


def test_export_model(capsys, tmp_path):
    path = tmp_path / "model.lp"
    code, payload = run(capsys, "export-model", "--export-model", str(path))
    assert code == 0
    assert payload["variables"] == 24
    assert payload["binaries"] == 22
    assert path.exists()
    code, _ = run(capsys, "export-model")
    assert code == 2


def test_enumerate(capsys, out_dir):
    code, payload = run(capsys, "enumerate", "--enum", "pe")
    assert code == 0
    assert payload["algorithm"] == "pe"
    assert payload["trips"]["l1"] == {"removed": None, "pi": 2, "adopt": 2, "reject_profitable": 0}
    assert payload["trips"]["l2"]["removed"] == "guaranteed_reject"
    assert (out_dir / "path_sets.csv").exists()
    code, payload = run(capsys, "enumerate")
    assert payload["algorithm"] == "pe-dcm"
    assert payload["trips"]["l1"]["pi"] is None


def test_preprocess_report(capsys, out_dir):
    code, payload = run(capsys, "preprocess-report")
    assert code == 0
    assert payload["removed_reject"] == 1
    assert payload["shuttle_arcs_removed"] == 6
    assert payload["removals"]["l2"]["kind"] == "guaranteed_reject"
    code, payload = run(capsys, "preprocess-report", "--no-preprocess")
    assert payload["removed_reject"] == 0
    assert payload["removals"] == {}
