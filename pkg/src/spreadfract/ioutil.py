"""Serialization conventions shared by every writer in the package.

Floats are rendered with repr(), the shortest string that parses back to
the identical double, so every CSV and JSON artifact round-trips
bit-exactly and two runs with the same inputs produce identical bytes.
Files land via temp-file-then-rename: an interrupted run never leaves a
truncated artifact.
"""
import hashlib
import json
import os
import tempfile


def fmt_float(value):
    """Shortest decimal string that round-trips to the same float64."""
    return repr(float(value))


def atomic_write_text(path, text):
    """Write text to path atomically (same-directory temp file + rename)."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path, header, rows):
    """Write rows of already-formatted strings under a comma-joined header."""
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path, payload):
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def sha256_of_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
