"""Line-delimited record files with an embedded provenance header.

Every artifact the pipeline writes starts with a single meta line
(``{"_meta": 1, ...}``) carrying the config digest, seeds, and the
digests of the input artifacts it was derived from.  Readers skip the
header transparently; ``read_meta`` recovers it for provenance checks.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

META_KEY = "_meta"


class ArtifactError(Exception):
    """Raised when an artifact is missing, malformed, or mismatched."""


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def digest_text(text: str) -> str:
    return digest_bytes(text.encode("utf-8"))


def digest_obj(obj: Any) -> str:
    """Stable digest of a JSON-serializable object."""
    return digest_text(json.dumps(obj, sort_keys=True, ensure_ascii=False))


def digest_file(path: str | Path) -> str:
    return digest_bytes(Path(path).read_bytes())


def dumps_record(rec: dict[str, Any]) -> str:
    return json.dumps(rec, ensure_ascii=False, sort_keys=True)


def write_records(
    path: str | Path,
    records: Iterable[dict[str, Any]],
    meta: Optional[dict[str, Any]] = None,
) -> int:
    """Write records as JSONL, atomically, with an optional meta header.

    Returns the number of data records written.  The write goes through
    a temp file and rename so re-runs either fully replace the artifact
    or leave the old one intact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8") as fh:
        if meta is not None:
            header = {META_KEY: 1}
            header.update(meta)
            fh.write(dumps_record(header) + "\n")
        for rec in records:
            fh.write(dumps_record(rec) + "\n")
            n += 1
    os.replace(tmp, path)
    return n


def read_records(path: str | Path) -> Iterator[dict[str, Any]]:
    """Yield data records from a JSONL artifact, skipping the meta header."""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"artifact not found: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ArtifactError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if lineno == 1 and isinstance(rec, dict) and META_KEY in rec:
                continue
            yield rec


def read_meta(path: str | Path) -> dict[str, Any]:
    """Return the meta header of an artifact ({} when absent)."""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"artifact not found: {path}")
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        return {}
    rec = json.loads(first)
    if isinstance(rec, dict) and META_KEY in rec:
        return rec
    return {}
