# -*- coding: utf-8 -*-

"""
Utilities for working with configuration files and click based on the
implementation from psf/black

Settings live under ``[tool.meshconflict]``; a nested table such as
``[tool.meshconflict.assign]`` holds the defaults of one subcommand.
"""

__all__ = [
    "ConfigError",
    "find_project_root",
    "find_config_toml",
    "parse_config_toml",
    "read_config_toml",
]

import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import click
import toml

CONFIG_FILENAMES = ["meshconflict.toml", "pyproject.toml"]


class ConfigError(click.FileError):
    """A configuration file that cannot be read; exits with status 3"""

    exit_code = 3


def find_project_root(srcs: Tuple[str, ...]) -> Path:
    """Return a directory containing .git, .hg, or a config file

    That directory will be a common parent of all files and directories
    passed in `srcs`.

    If no directory in the tree contains a marker that would specify it's the
    project root, the root of the file system is returned.
    """
    if not srcs:
        return Path("/").resolve()

    path_srcs = [Path(Path.cwd(), src).resolve() for src in srcs]

    src_parents = [
        list(path.parents) + ([path] if path.is_dir() else [])
        for path in path_srcs
    ]

    common_base = max(
        set.intersection(*(set(parents) for parents in src_parents)),
        key=lambda path: path.parts,
    )

    for directory in (common_base, *common_base.parents):
        if (directory / ".git").exists():
            return directory

        if (directory / ".hg").is_dir():
            return directory

        for fn in CONFIG_FILENAMES:
            if (directory / fn).is_file():
                return directory

    return directory


def find_user_config_toml() -> Path:
    r"""Return the path to the user configuration

    This is ~\.meshconflict on Windows and
    $XDG_CONFIG_HOME/meshconflict.toml (default ~/.config) elsewhere.
    """
    if sys.platform == "win32":
        user_config_path = Path.home() / ".meshconflict"
    else:
        config_root = os.environ.get("XDG_CONFIG_HOME", "~/.config")
        user_config_path = Path(config_root).expanduser() / "meshconflict.toml"
    return user_config_path.resolve()


def find_config_toml(path_search_start: str) -> Optional[str]:
    """Find the absolute filepath to a config file if it exists"""
    path_project_root = find_project_root((path_search_start,))

    for fn in CONFIG_FILENAMES:
        path_toml = path_project_root / fn
        if path_toml.is_file() and _has_section(path_toml):
            return str(path_toml)

    try:
        path_user_config_toml = find_user_config_toml()
        return (
            str(path_user_config_toml)
            if path_user_config_toml.is_file()
            else None
        )
    except PermissionError:
        return None


def _has_section(path: Path) -> bool:
    if path.name != "pyproject.toml":
        return True
    try:
        return "meshconflict" in toml.load(path).get("tool", {})
    except (toml.TomlDecodeError, OSError):
        return True


def _normalize(
    config: Dict[str, Any], commands: Tuple[str, ...]
) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for key, value in config.items():
        if key in commands and isinstance(value, dict):
            result[key] = _normalize(value, ())
            continue
        key = key.replace("--", "").replace("-", "_")
        # click only parses strings reliably
        # https://github.com/pallets/click/issues/1567
        result[key] = value if isinstance(value, (list, dict)) else str(value)
    return result


def parse_config_toml(
    path_config: str, commands: Tuple[str, ...] = ()
) -> Dict[str, Any]:
    """Parse a config toml file, pulling out the meshconflict settings

    Tables named after one of ``commands`` are kept nested. If parsing
    fails, will raise a toml.TomlDecodeError
    """
    config_toml = toml.load(path_config)
    if "tool" in config_toml:
        config = config_toml["tool"].get("meshconflict", {})
    else:
        config = config_toml
    return _normalize(config, commands)


def read_config_toml(
    ctx: click.Context, param: click.Parameter, value: Optional[str]
) -> Optional[str]:
    """Inject configuration from a TOML file into defaults in `ctx`

    Returns the path to a successfully found and read configuration file, None
    otherwise.
    """
    if not value:
        value = find_config_toml(os.getcwd())
        if value is None:
            return None

    commands: Tuple[str, ...] = ()
    if isinstance(ctx.command, click.Group):
        commands = tuple(ctx.command.commands)

    try:
        config = parse_config_toml(value, commands)
    except (toml.TomlDecodeError, OSError) as e:
        raise ConfigError(
            filename=value, hint=f"Error reading configuration file: {e}"
        )

    if not config:
        return None

    default_map: Dict[str, Any] = {}
    if ctx.default_map:
        default_map.update(ctx.default_map)
    for key, item in config.items():
        if isinstance(item, dict) and isinstance(default_map.get(key), dict):
            default_map[key] = {**default_map[key], **item}
        else:
            default_map[key] = item

    ctx.default_map = default_map
    return value
