"""Deterministic artifact writers for the command-line tool.

Every artifact opens with '#'-prefixed metadata lines carrying the tool
version, the full configuration echo, the seed, and the precision mode.
Nothing time-dependent is ever written, so rerunning a command with the
same configuration reproduces the file byte for byte. CSV bodies follow
RFC 4180 conventions with a header row, '.' decimals, and LF line ends;
floats are written in shortest round-trip form.
"""

from __future__ import annotations

import csv
import json
from typing import IO, Iterable, Sequence

import numpy as np

from . import __version__
from .distributions import OffspringDistribution


def run_meta(command: str, dist: OffspringDistribution | None = None,
             seed: int | None = None, precision: str | None = None,
             **extra) -> dict:
    """Metadata block embedded at the top of every artifact."""
    meta: dict = {"tool": "gwminimax", "version": __version__, "command": command}
    if dist is not None:
        meta["dist"] = dist.spec_string()
    for key, value in extra.items():
        if value is not None:
            meta[key] = value
    if seed is not None:
        meta["seed"] = seed
    if precision is not None:
        meta["precision"] = precision
    return meta


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(target: str | IO[str], header: Sequence[str],
              rows: Iterable[Sequence], meta: dict) -> None:
    """CSV artifact with a '#' metadata preamble."""

    def emit(handle: IO[str]) -> None:
        for key, value in meta.items():
            handle.write(f"# {key}: {value}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])

    if hasattr(target, "write"):
        emit(target)
    else:
        with open(target, "w", encoding="utf-8", newline="") as handle:
            emit(handle)


def write_json(target: str | IO[str], payload: dict, meta: dict) -> None:
    """JSON artifact; the metadata rides along under the 'meta' key."""
    text = json.dumps({"meta": meta, **payload}, indent=2, sort_keys=True)
    if hasattr(target, "write"):
        target.write(text + "\n")
    else:
        with open(target, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
