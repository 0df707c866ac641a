"""
Integral files and run configuration in, reproducible reports out.

FCIDUMP
    A namelist header followed by ``value i j k l`` lines with 1-based
    orbital indices in chemists' order::

        &FCI NORB=2,NELEC=2,MS2=0,
         ORBSYM=1,1,
         ISYM=1,
        &END
         0.5  1 1 1 1
        -0.1  1 2 0 0
         1.2  0 0 0 0

    ``i j k l`` all nonzero is (ij|kl); ``k = l = 0`` is h(i, j);
    all zero is the core energy. Values are hartree and may use a Fortran
    ``D`` exponent. Every entry is expanded over its permutational
    partners; two entries for the same integral must agree within 1e-10.

Configuration
    INI syntax read by :mod:`configparser` with interpolation off. Each
    command declares the sections and keys it accepts; anything else is
    an error. Orbital lists are whitespace- or comma-separated integers.

Output
    Floats are written with 12 significant digits (``%.12g``), ``-0`` is
    normalized to ``0`` and NaN becomes an empty CSV cell or JSON null.
    Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, FcidumpError, IntegrityError
from .secondq import IntegralSet

__all__ = [
    "FcidumpData",
    "read_fcidump",
    "parse_fcidump",
    "write_fcidump",
    "ConfigSpec",
    "load_config",
    "parse_orbitals",
    "format_float",
    "canonical",
    "csv_text",
    "json_text",
    "atomic_write",
    "timestamp",
]

DUPLICATE_TOL = 1e-10
SIG_DIGITS = 12


# ---------------------------------------------------------------------------
# FCIDUMP

@dataclass(frozen=True)
class FcidumpData:
    ints: IntegralSet
    nelec: int
    ms2: int
    orbsym: tuple
    isym: Optional[int]


_HEADER_START = re.compile(r"&FCI\b", re.IGNORECASE)
_HEADER_END = re.compile(r"&END\b|/\s*$", re.IGNORECASE)


def _parse_header(text: str, lineno: int) -> dict:
    """``KEY=v1,v2,...`` pairs; bare tokens extend the preceding key."""
    body = _HEADER_END.sub(" ", _HEADER_START.sub(" ", text, count=1))
    entries = {}
    key = None
    for tok in (t for t in re.split(r"[,\s]+", body) if t):
        if "=" in tok:
            key, _, val = tok.partition("=")
            key = key.upper()
            if not re.fullmatch(r"[A-Z_][A-Z0-9_]*", key):
                raise FcidumpError(f"malformed header key {key!r}", lineno)
            if key in entries:
                raise FcidumpError(f"header key {key} given twice", lineno)
            entries[key] = [val] if val else []
        elif key is None:
            raise FcidumpError(f"malformed header near {tok!r}", lineno)
        else:
            entries[key].append(tok)
    return entries


def _header_int(entries: dict, key: str, lineno: int, default=None) -> Optional[int]:
    if key not in entries:
        if default is None:
            raise FcidumpError(f"header lacks {key}", lineno)
        return default
    vals = entries[key]
    if len(vals) != 1:
        raise FcidumpError(f"{key} must be a single integer", lineno)
    try:
        return int(vals[0])
    except ValueError:
        raise FcidumpError(f"{key}={vals[0]!r} is not an integer", lineno) from None


def _float(token: str, lineno: int) -> float:
    try:
        v = float(token.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise FcidumpError(f"non-numeric value {token!r}", lineno) from None
    if not math.isfinite(v):
        raise FcidumpError(f"non-finite value {token!r}", lineno)
    return v


def read_fcidump(path) -> FcidumpData:
    """Parse an FCIDUMP file with its header fields."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FcidumpError(f"cannot read {path}: {exc.strerror}") from None
    i = 0
    while i < len(lines) and not lines[i].strip():
        i += 1
    if i == len(lines) or not _HEADER_START.search(lines[i]):
        raise FcidumpError("file does not start with an &FCI header", i + 1)
    start = i
    chunk = []
    while i < len(lines):
        chunk.append(lines[i])
        if _HEADER_END.search(lines[i]):
            break
        i += 1
    else:
        raise FcidumpError("header is not terminated by &END or /", start + 1)
    entries = _parse_header(" ".join(chunk), start + 1)
    norb = _header_int(entries, "NORB", start + 1)
    if not 0 < norb <= 32:
        raise FcidumpError(f"NORB={norb} outside 1..32", start + 1)
    nelec = _header_int(entries, "NELEC", start + 1)
    ms2 = _header_int(entries, "MS2", start + 1, default=0)
    if not 0 <= nelec <= 2 * norb or abs(ms2) > nelec or (nelec - ms2) % 2:
        raise FcidumpError(f"NELEC={nelec}, MS2={ms2} inconsistent with NORB={norb}", start + 1)
    isym = _header_int(entries, "ISYM", start + 1, default=-1)
    raw_sym = entries.get("ORBSYM", ["1"] * norb)
    orbsym = tuple(int(v) for v in raw_sym) if all(re.fullmatch(r"\d+", v) for v in raw_sym) else ()
    if len(orbsym) != norb or any(s < 1 for s in orbsym):
        raise FcidumpError(f"ORBSYM must list {norb} positive integers", start + 1)
    uhf = entries.get("UHF", [".FALSE."])
    if uhf and uhf[0].upper().strip(".") in ("TRUE", "T"):
        raise FcidumpError("unrestricted (UHF) integral files are not supported", start + 1)

    core = None
    h = {}
    g = {}
    for lineno in range(i + 2, len(lines) + 1):
        raw = lines[lineno - 1].split("!")[0].strip()
        if not raw:
            continue
        tok = raw.split()
        if len(tok) != 5:
            raise FcidumpError(f"expected 'value i j k l', got {raw!r}", lineno)
        val = _float(tok[0], lineno)
        try:
            p, q, r, s = (int(t) for t in tok[1:])
        except ValueError:
            raise FcidumpError(f"non-integer index in {raw!r}", lineno) from None
        if min(p, q, r, s) < 0 or max(p, q, r, s) > norb:
            raise FcidumpError(f"index outside 0..NORB={norb} in {raw!r}", lineno)
        if p == q == r == s == 0:
            key, store = None, "core"
        elif r == s == 0 and p > 0 and q > 0:
            key, store = (min(p, q), max(p, q)), h
        elif min(p, q, r, s) > 0:
            a, b = sorted((p, q))
            c, d = sorted((r, s))
            key, store = min((a, b, c, d), (c, d, a, b)), g
        else:
            raise FcidumpError(f"index pattern {p} {q} {r} {s} is not an integral", lineno)
        if store == "core":
            if core is not None and abs(core[0] - val) > DUPLICATE_TOL:
                raise IntegrityError(f"core energy {val} conflicts with line {core[1]}", lineno)
            core = (val, lineno)
            continue
        if key in store and abs(store[key][0] - val) > DUPLICATE_TOL:
            raise IntegrityError(
                f"integral {key} = {val} conflicts with {store[key][0]} from line {store[key][1]}",
                lineno)
        store[key] = (val, lineno)

    hm = np.zeros((norb, norb))
    for (p, q), (v, _) in h.items():
        hm[p - 1, q - 1] = hm[q - 1, p - 1] = v
    gm = np.zeros((norb,) * 4)
    for (p, q, r, s), (v, _) in g.items():
        p, q, r, s = p - 1, q - 1, r - 1, s - 1
        for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                           (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)):
            gm[a, b, c, d] = v
    ints = IntegralSet(norb, 0.0 if core is None else core[0], hm, gm)
    return FcidumpData(ints, nelec, ms2, orbsym, None if isym == -1 else isym)


def parse_fcidump(path) -> IntegralSet:
    """Integrals of an FCIDUMP file; see :func:`read_fcidump` for the header."""
    return read_fcidump(path).ints


def write_fcidump(path, ints: IntegralSet, nelec: int, ms2: int = 0, tol: float = 0.0):
    """Write unique integrals with ``|value| > tol`` in FCIDUMP format."""
    n = ints.norb
    out = [f" &FCI NORB={n},NELEC={nelec},MS2={ms2},",
           "  ORBSYM=" + ",".join(["1"] * n) + ",", "  ISYM=1,", " &END"]
    fmt = "{:24.16e} {:4d} {:4d} {:4d} {:4d}"
    for p in range(n):
        for q in range(p + 1):
            for r in range(n):
                for s in range(r + 1):
                    if (p * (p + 1) // 2 + q) < (r * (r + 1) // 2 + s):
                        continue
                    v = ints.g[p, q, r, s]
                    if abs(v) > tol:
                        out.append(fmt.format(v, p + 1, q + 1, r + 1, s + 1))
    for p in range(n):
        for q in range(p + 1):
            v = ints.h[p, q]
            if abs(v) > tol:
                out.append(fmt.format(v, p + 1, q + 1, 0, 0))
    out.append(fmt.format(ints.core_energy, 0, 0, 0, 0))
    atomic_write(path, "\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ConfigSpec:
    """Accepted sections, each mapping key -> (converter, default)."""

    sections: Dict[str, Dict[str, tuple]] = field(default_factory=dict)

    def section(self, name: str, **keys) -> "ConfigSpec":
        self.sections.setdefault(name, {}).update(keys)
        return self


REQUIRED = object()


def parse_orbitals(text: str) -> tuple:
    try:
        vals = tuple(int(t) for t in re.split(r"[,\s]+", text.strip()) if t)
    except ValueError:
        raise ConfigError(f"orbital list {text!r} must be integers") from None
    if not vals:
        raise ConfigError("empty orbital list")
    return vals


def load_config(path: Optional[str], spec: ConfigSpec) -> Dict[str, Dict[str, Any]]:
    """
    Read ``path`` (or nothing) against ``spec`` and return every section
    with defaults filled in. Unknown sections or keys, missing required
    keys, and unconvertible values raise ConfigError.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       default_section="\x00unused",
                                       inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError(f"config {path}: {str(exc).splitlines()[0]}") from None
    out = {}
    for name in parser.sections():
        if name not in spec.sections:
            raise ConfigError(f"unknown section [{name}]; allowed: "
                              + ", ".join(f"[{s}]" for s in spec.sections))
        for key in parser[name]:
            if key not in spec.sections[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]; allowed: "
                                  + ", ".join(spec.sections[name]))
    for name, keys in spec.sections.items():
        sec = {}
        for key, (conv, default) in keys.items():
            if parser.has_option(name, key):
                raw = parser.get(name, key)
                try:
                    sec[key] = conv(raw)
                except ConfigError:
                    raise
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"[{name}] {key} = {raw!r}: {exc}") from None
            elif default is REQUIRED:
                raise ConfigError(f"missing required key {key!r} in [{name}]")
            else:
                sec[key] = default
        out[name] = sec
    return out


# ---------------------------------------------------------------------------
# deterministic serialization

def format_float(x: float) -> str:
    """12 significant digits, locale independent, ``-0`` shown as ``0``."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    x = float(x)
    if x == 0:
        return "0"
    return format(x, f".{SIG_DIGITS}g")


def canonical(obj):
    """Recursively round floats to 12 significant digits for JSON."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return 0.0 if x == 0 else float(format(x, f".{SIG_DIGITS}g"))
    if isinstance(obj, Path):
        return str(obj)
    return obj


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else
                    "" if v is None else v for v in row])
    return buf.getvalue()


def json_text(doc) -> str:
    return json.dumps(canonical(doc), indent=2, sort_keys=False, allow_nan=False) + "\n"


def atomic_write(path, text: str):
    """Write ``text`` to a temporary file beside ``path`` and rename it over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def timestamp() -> Optional[str]:
    """UTC time from SOURCE_DATE_EPOCH, or None so output stays reproducible."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return None
    import datetime
    try:
        t = datetime.datetime.fromtimestamp(int(epoch), tz=datetime.timezone.utc)
    except ValueError:
        raise ConfigError(f"SOURCE_DATE_EPOCH={epoch!r} is not an integer") from None
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")
