"""Run manifests: every artifact-producing command records its resolved flags,
seed, input digests and tool version next to its primary output."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Mapping


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_manifest(primary_output: str | Path, command: str,
                   flags: Mapping[str, object],
                   inputs: Iterable[str | Path]) -> Path:
    from . import __version__

    record = {
        "command": command,
        "flags": {k: _jsonable(v) for k, v in sorted(flags.items())},
        "seed": flags.get("seed"),
        "inputs": {str(p): file_digest(p) for p in inputs},
        "version": __version__,
    }
    path = Path(str(primary_output) + ".manifest.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
