"""Text formats: grid functions, cube lists, weight specs and key = value configs.

Function files start with a line ``d L`` followed by the ``2^(dL)`` cell
values in row-major (C) order, separated by any whitespace.  Cube files hold
one cube per line in the ``s=<..>;l=<..>;k=<..>`` form; ``#`` starts a comment
in both.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable

from .dyadic import Cube, Domain, parse_cube
from .errors import ConfigError
from .gridfunc import INF, GridFunction
from .weights import lognormal_weight, power_weight

__all__ = [
    "read_function",
    "write_function",
    "read_cubes",
    "write_cubes",
    "parse_weight",
    "parse_config",
    "parse_floats",
]


def _strip_comments(text: str) -> list[str]:
    return [line.split("#", 1)[0] for line in text.splitlines()]


def read_function(path, signed: bool = False) -> GridFunction:
    text = Path(path).read_text()
    tokens = " ".join(_strip_comments(text)).split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'd L' header")
    try:
        d, L = int(tokens[0]), int(tokens[1])
        values = [float(t) for t in tokens[2:]]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    domain = Domain(d, L)
    if len(values) != domain.ncells:
        raise ValueError(f"{path}: expected {domain.ncells} values, found {len(values)}")
    return GridFunction(domain, values, signed=signed)


def write_function(f: GridFunction, path) -> None:
    lines = [f"{f.domain.dim} {f.domain.max_level}"]
    lines += [repr(float(x)) for x in f.values.reshape(-1)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_cubes(path) -> list[Cube]:
    out = []
    for n, line in enumerate(_strip_comments(Path(path).read_text()), 1):
        if line.strip():
            try:
                out.append(parse_cube(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{n}: {exc}") from exc
    return out


def write_cubes(cubes: Iterable[Cube], path) -> None:
    Path(path).write_text("".join(f"{c}\n" for c in cubes))


def parse_floats(text: str, key: str = "value") -> list[float]:
    """Comma or whitespace separated reals; ``inf`` is accepted."""
    try:
        return [INF if t.lower() in ("inf", "infinity") else float(t)
                for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as numbers", key) from exc


def parse_weight(spec: str, domain: Domain, base_dir=None, key: str = "weight") -> GridFunction:
    """Build a function from the weight mini-language.

    ``const:c``, ``power:a`` or ``power:a:x1,..,xd`` (centre), ``cells:v1,v2,..``
    (row-major values), ``random-lognormal:seed`` or
    ``random-lognormal:seed:sigma`` and ``file:path`` (relative paths resolve
    against ``base_dir``).
    """
    kind, _, rest = spec.strip().partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == "const":
            return GridFunction.constant(domain, float(parts[0]) if parts else 1.0)
        if kind == "power":
            center = parse_floats(parts[1], key) if len(parts) > 1 else None
            return power_weight(domain, float(parts[0]), center)
        if kind == "cells":
            return GridFunction(domain, parse_floats(rest, key))
        if kind == "random-lognormal":
            sigma = float(parts[1]) if len(parts) > 1 else 1.0
            return lognormal_weight(domain, int(parts[0]), sigma)
        if kind == "file":
            path = Path(rest)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            f = read_function(path)
            if f.domain != domain:
                raise ConfigError(f"{key}: {path} lives on {f.domain}, expected {domain}", key)
            return f
    except ConfigError:
        raise
    except (ValueError, IndexError, OSError) as exc:
        raise ConfigError(f"{key}: bad weight spec {spec!r} ({exc})", key) from exc
    raise ConfigError(f"{key}: unknown weight kind {kind!r}", key)


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out: dict[str, str] = {}
    for n, line in enumerate(_strip_comments(text), 1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {line.strip()!r}")
        if key in out:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}", key)
        out[key] = value.strip()
    return out


def read_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    cfg = parse_config(text, os.fspath(path))
    cfg.setdefault("__dir__", str(Path(path).resolve().parent))
    return cfg
