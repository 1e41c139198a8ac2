"""File-writing helpers: atomic replacement and canonical serialization.

All writers in this package render the full payload in memory and then move
it into place with ``os.replace``, so a failed run never leaves a partial
output file behind. Byte-identical reruns are part of the output contract;
floats are rendered with ``repr`` (shortest round-trip form) and JSON is
emitted with sorted keys.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path


def write_text_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json_atomic(path: str | Path, obj) -> None:
    write_text_atomic(path, dumps_json(obj))


def fmt_float(value: float | None) -> str:
    """Round-trip-exact float cell; empty string for missing values."""
    return "" if value is None else repr(float(value))
