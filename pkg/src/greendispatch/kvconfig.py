"""Minimal key = value config file format shared by scenario and run configs.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Parse errors carry the line number.
"""

from __future__ import annotations

from pathlib import Path


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{source}, line {line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ValueError(f"{source}, line {line_no}: empty key")
        if key in out:
            raise ValueError(f"{source}, line {line_no}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_kv_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    return parse_kv_text(path.read_text(encoding="utf-8"), source=str(path))


def format_kv(pairs: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs.items())


def parse_bool(value: str, key: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"key {key!r}: expected a boolean, got {value!r}")
