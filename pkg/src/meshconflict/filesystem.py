# -*- coding: utf-8 -*-

__all__ = [
    "write_text",
    "write_json",
    "write_csv",
    "read_json",
    "read_csv",
    "config_hash",
    "sidecar_path",
    "write_sidecar",
    "rm_file_or_dir",
]

import csv
import hashlib
import io
import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import click


def write_text(path: Path, text: str, *, verbose: bool = False) -> Path:
    """Write ``text`` to ``path`` through a temporary file in the same
    directory, so readers never see a partial file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        rm_file_or_dir(Path(tmp))
        raise
    if verbose:
        click.secho(f"Wrote {path}")
    return path


def write_json(path: Path, data: Any, *, verbose: bool = False) -> Path:
    text = json.dumps(data, indent=2) + "\n"
    return write_text(path, text, verbose=verbose)


def read_json(path: Path) -> Any:
    with open(path, "r") as f:
        return json.load(f)


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    *,
    verbose: bool = False,
) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return write_text(path, buffer.getvalue(), verbose=verbose)


def read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, "r", newline="") as f:
        return list(csv.DictReader(f))


def config_hash(config: Mapping[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


def write_sidecar(
    path: Path,
    *,
    command: str,
    config: Mapping[str, Any],
    version: str,
    verbose: bool = False,
) -> Path:
    """Record the configuration that produced ``path`` next to it"""
    path = Path(path)
    with open(path, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()
    data: Dict[str, Any] = {
        "command": command,
        "version": version,
        "config": dict(config),
        "config_sha256": config_hash(config),
        "output": path.name,
        "output_sha256": digest,
    }
    return write_json(sidecar_path(path), data, verbose=verbose)


def rm_file_or_dir(path: Path, verbose: bool = False) -> None:
    if path.exists():
        if verbose:
            click.secho(f"{path} exists, removing")
        if path.is_file() or path.is_symlink():
            path.unlink()
        else:
            shutil.rmtree(path)
