"""Flat key-value configs and deterministic result files."""

from __future__ import annotations

import configparser
import json
from pathlib import Path
from typing import Mapping

from . import __version__
from .errors import ConfigError

_SECTION = "scenario"


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines (``#`` comments allowed) into a flat dict."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    return dict(parser[_SECTION])


def read_config(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def format_config(cfg: Mapping[str, object]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in sorted(cfg.items()))


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_result(out_dir: Path, name: str, content: str, provenance: Mapping[str, object]) -> Path:
    """Write ``content`` plus a ``<name>.provenance.json`` sidecar; LF endings, UTF-8."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(content, encoding="utf-8", newline="\n")
    sidecar = dict(provenance)
    sidecar["output"] = name
    sidecar["tool_version"] = __version__
    (out_dir / f"{name}.provenance.json").write_text(dump_json(sidecar), encoding="utf-8", newline="\n")
    return path
