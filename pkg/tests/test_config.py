# -*- coding: utf-8 -*-

import tempfile
from pathlib import Path

from meshconflict.config import find_project_root, parse_config_toml


def test_parse_tool_section() -> None:
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "pyproject.toml"
        path.write_text(
            "[tool.black]\nline-length = 79\n\n"
            "[tool.meshconflict]\nverbose = true\n\n"
            "[tool.meshconflict.evaluate]\nphy-rate = 9.0\ngateway = 0\n"
        )
        config = parse_config_toml(str(path), ("evaluate", "assign"))
    assert config == {
        "verbose": "True",
        "evaluate": {"phy_rate": "9.0", "gateway": "0"},
    }


def test_parse_plain_file() -> None:
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "meshconflict.toml"
        path.write_text('grid = "3x3"\n\n[gen]\nradios = 1\n')
        assert parse_config_toml(str(path)) == {
            "grid": "3x3",
            "gen": {"radios": 1},
        }
        assert parse_config_toml(str(path), ("gen",)) == {
            "grid": "3x3",
            "gen": {"radios": "1"},
        }


def test_project_root() -> None:
    with tempfile.TemporaryDirectory() as d:
        root = Path(d).resolve()
        (root / "meshconflict.toml").write_text("")
        nested = root / "a" / "b"
        nested.mkdir(parents=True)
        assert find_project_root((str(nested),)) == root
