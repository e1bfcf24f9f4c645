import json
from pathlib import Path

import pytest

from btembed.cli import main
from btembed.scenarios import CATALOG


def test_list(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["list"]) == 0
    listed = json.loads(capsys.readouterr().out)
    assert [s["name"] for s in listed] == list(CATALOG)


def test_embed_writes_json(tmp_path: Path) -> None:
    out = tmp_path / "sub" / "embed.json"
    assert main(["embed", "sp2-ramified", "--json", str(out)]) == 0
    written = json.loads(out.read_text())
    assert written["scenario"] == "sp2-ramified"
    assert "image" in written


def test_decompose(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["decompose", "sp4-mixed"]) == 0
    assert "J_o" in capsys.readouterr().out


def test_check_passes() -> None:
    assert main(["check", "sp2-ramified", "--checks", "expected-embedding"]) == 0


def test_check_failure_exit_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    tampered = CATALOG["sp2-ramified"].model_copy(
        update={"name": "tampered", "expected_offsets": ["0", "0"]},
    )
    path = tmp_path / "tampered.json"
    path.write_text(tampered.model_dump_json())
    assert main(["check", str(path), "--checks", "expected-embedding"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["checks"][0]["verdict"] == "fail"
    assert report["checks"][0]["witness"]


def test_nilpotent_beta_is_rejected(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "nilpotent.json"
    path.write_text(json.dumps({"name": "nilpotent", "beta": [[0, 1], [0, 0]]}))
    assert main(["embed", str(path)]) == 2
    assert "H1Violated" in capsys.readouterr().err


@pytest.mark.parametrize(
    ("argv", "error"),
    [
        (["embed", "sp2-ramified", "--prime", "2"], "UnsupportedResidueChar"),
        (["embed", "no-such-scenario"], "ScenarioParseError"),
    ],
)
def test_input_errors(argv: list[str], error: str, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(argv) == 2
    assert error in capsys.readouterr().err


def test_filtration() -> None:
    assert main(["filtration", "sp2-ramified"]) == 0


def test_search_unique(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["search-unique", "sp2-ramified"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["matches"]
    assert result["passing"] == [result["image"]]


def test_export_tree(tmp_path: Path) -> None:
    out = tmp_path / "tree.dot"
    assert main(["export-tree", "sp2-ramified", "--out", str(out)]) == 0
    assert out.read_text().startswith("graph")
