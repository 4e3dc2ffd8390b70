"""Flat key-value scenario files.

Grammar (one statement per line)::

    # comment            -- lines starting with '#' and blank lines are ignored
    key = value          -- whitespace around '=' is optional

Numeric keys, all in SI base units::

    user1.h  user1.g  user1.p_max  [user1.p_circuit]     (same for user2)
    [sigma_h_sq]  [block_t]

Optional keys default to ``p_circuit = 0``, ``sigma_h_sq = 0``, ``block_t = 1``.
Keys ``meta.<name>`` carry free text (seed, generator) and are preserved.
Unknown or repeated keys are errors.
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import ScenarioError
from .model import Scenario, UserLink

USER_FIELDS = ("h", "g", "p_max", "p_circuit")
REQUIRED = tuple(f"user{k}.{f}" for k in (1, 2) for f in ("h", "g", "p_max"))
OPTIONAL = {"user1.p_circuit": 0.0, "user2.p_circuit": 0.0, "sigma_h_sq": 0.0, "block_t": 1.0}
KNOWN = set(REQUIRED) | set(OPTIONAL)


class ScenarioFileError(ScenarioError):
    def __init__(self, message, path=None, line=None, key=None):
        where = str(path) if path is not None else "<scenario>"
        if line is not None:
            where += f":{line}"
        if key is not None:
            message = f"field {key}: {message}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.key = key


def parse_scenario(text: str, path=None) -> tuple[Scenario, dict]:
    """Parse scenario text; returns ``(scenario, meta)``."""
    values: dict[str, float] = {}
    lines: dict[str, int] = {}
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioFileError(f"expected 'key = value', got {raw!r}", path, lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if not key:
            raise ScenarioFileError("missing key before '='", path, lineno)
        if key in lines or key in meta:
            raise ScenarioFileError("duplicate key", path, lineno, key)
        if key.startswith("meta."):
            meta[key[5:]] = value
            lines[key] = lineno
            continue
        if key not in KNOWN:
            raise ScenarioFileError("unknown key", path, lineno, key)
        try:
            number = float(value)
        except ValueError:
            raise ScenarioFileError(f"not a number: {value!r}", path, lineno, key) from None
        if not math.isfinite(number):
            raise ScenarioFileError(f"must be finite, got {value!r}", path, lineno, key)
        values[key] = number
        lines[key] = lineno
    for key in REQUIRED:
        if key not in values:
            raise ScenarioFileError("missing required key", path, None, key)
    for key, default in OPTIONAL.items():
        values.setdefault(key, default)

    users = []
    for k in (1, 2):
        for f in USER_FIELDS:
            key = f"user{k}.{f}"
            v = values[key]
            if v < 0:
                raise ScenarioFileError(f"must be >= 0, got {v!r}", path, lines.get(key), key)
        users.append(UserLink(*(values[f"user{k}.{f}"] for f in USER_FIELDS)))
    if values["sigma_h_sq"] < 0:
        raise ScenarioFileError("must be >= 0", path, lines.get("sigma_h_sq"), "sigma_h_sq")
    if values["block_t"] <= 0:
        raise ScenarioFileError("must be > 0", path, lines.get("block_t"), "block_t")
    try:
        scenario = Scenario(tuple(users), values["sigma_h_sq"], values["block_t"])
    except ScenarioError as exc:
        raise ScenarioFileError(str(exc), path) from None
    return scenario, meta


def load_scenario(path) -> tuple[Scenario, dict]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFileError(f"cannot read file: {exc.strerror}", path) from None
    return parse_scenario(text, path)


def format_scenario(s: Scenario, meta: dict | None = None) -> str:
    """Serialize so that :func:`parse_scenario` reproduces ``s`` bit for bit."""
    out = []
    for key, value in (meta or {}).items():
        out.append(f"meta.{key} = {value}")
    if out:
        out.append("")
    out.append(f"sigma_h_sq = {s.sigma_h_sq!r}")
    out.append(f"block_t = {s.block_t!r}")
    for k, u in enumerate(s.users, start=1):
        out.append("")
        for f in USER_FIELDS:
            out.append(f"user{k}.{f} = {getattr(u, f)!r}")
    return "\n".join(out) + "\n"
