"""JSON readers for channel, ensemble and extra-input files.

Complex matrix entries are plain numbers or ``[re, im]`` pairs. Any
validation failure is reported with the line of the offending key.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import channels as ch
from .errors import QmacError, ValidationError
from .quantum_core import Instrument, KrausChannel

CHANNEL_KINDS = ("kraus", "cq_table", "bosonic")


class ParseError(ValidationError):
    pass


class _Doc:
    """Parsed JSON document that remembers its source text for line lookups."""

    def __init__(self, text: str, name: str):
        self.text = text
        self.name = name
        try:
            self.data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{name}:{exc.lineno}: malformed JSON: {exc.msg}") from None
        if not isinstance(self.data, dict):
            raise ParseError(f"{name}:1: top level must be a JSON object")

    def line_of(self, key: str) -> int:
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else 1

    def fail(self, key: str, msg: str):
        raise ParseError(f"{self.name}:{self.line_of(key)}: key {key!r}: {msg}")

    def get(self, key: str, required: bool = True, default: Any = None):
        if key not in self.data:
            if required:
                raise ParseError(f"{self.name}:1: missing required key {key!r}")
            return default
        return self.data[key]

    def convert(self, key: str, fn, required: bool = True):
        raw = self.get(key, required)
        if raw is None:
            return None
        try:
            return fn(raw)
        except (QmacError, ValueError, TypeError) as exc:
            self.fail(key, str(exc))


def load(path) -> _Doc:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"{p}: cannot read file: {exc.strerror}") from None
    return _Doc(text, str(p))


def real_array(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("entries must be finite numbers")
    return arr


def _matrix_stack(raw) -> np.ndarray:
    """List of square complex matrices."""
    if not isinstance(raw, list) or not raw:
        raise ValueError("expected a non-empty list of matrices")
    mats = [_matrix(m) for m in raw]
    if len({m.shape for m in mats}) != 1:
        raise ValueError("matrices differ in shape")
    return np.stack(mats)


def _matrix(raw) -> np.ndarray:
    """One (possibly non-square) complex matrix: rows of entries."""
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise ValueError("a matrix must be a list of rows")
    rows = []
    for r in raw:
        row = []
        for x in r:
            if isinstance(x, bool):
                raise ValueError("booleans are not numbers")
            if isinstance(x, (int, float)):
                row.append(complex(x))
            elif isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
                row.append(complex(x[0], x[1]))
            else:
                raise ValueError("matrix entries must be numbers or [re, im] pairs")
        rows.append(row)
    if len({len(r) for r in rows}) != 1:
        raise ValueError("ragged matrix rows")
    return np.array(rows, dtype=complex)


# --- channels ----------------------------------------------------------------

def read_channel(path):
    """``CribbingMac``, ``CqMacSpec`` or ``BosonicParams`` from a channel file."""
    return parse_channel(load(path))


def parse_channel(doc: _Doc):
    kind = doc.get("kind")
    if kind not in CHANNEL_KINDS:
        doc.fail("kind", f"must be one of {', '.join(CHANNEL_KINDS)}")
    if kind == "bosonic":
        vals = {}
        for f in ("eta1", "eta2", "N_A1", "N_A2", "N_C"):
            v = doc.get(f)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                doc.fail(f, "must be a number")
            vals[f] = float(v)
        try:
            return ch.BosonicParams(**vals)
        except QmacError as exc:
            doc.fail(str(exc).split(" ")[0], str(exc))
    if kind == "cq_table":
        return _parse_cq(doc)
    return _parse_kraus(doc)


def _dims(doc: _Doc, n: int) -> list[int]:
    raw = doc.get("dims")
    if not isinstance(raw, list) or len(raw) != n or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in raw):
        doc.fail("dims", f"must be a list of {n} positive integers")
    return raw


def _parse_kraus(doc: _Doc) -> ch.CribbingMac:
    d_a1, d_a1p, d_e, d_a2, d_b = _dims(doc, 5)
    L = doc.convert("L", lambda r: KrausChannel(d_a1, d_a1p * d_e, tuple(_matrix_stack(r))))
    N = doc.convert("N", lambda r: KrausChannel(d_a1p * d_a2, d_b, tuple(_matrix_stack(r))))
    return ch.CribbingMac(d_a1, d_a1p, d_e, d_a2, d_b, L, N)


def _parse_cq(doc: _Doc) -> ch.CqMacSpec:
    alph = doc.get("alphabets")
    if not isinstance(alph, list) or len(alph) != 2 or not all(isinstance(a, int) and a >= 1 for a in alph):
        doc.fail("alphabets", "must be [|X1|, |X2|] with positive integers")
    d_b = _dims(doc, 1)[0] if "dims" in doc.data else None

    def table(raw):
        if not isinstance(raw, list) or len(raw) != alph[0] or not all(isinstance(r, list) and len(r) == alph[1] for r in raw):
            raise ValueError(f"must be an {alph[0]} x {alph[1]} nested list of density matrices")
        t = np.array([[_matrix(m) for m in row] for row in raw])
        if t.ndim != 4 or (d_b is not None and t.shape[2:] != (d_b, d_b)):
            raise ValueError("every entry must be a d_B x d_B matrix")
        return t

    t = doc.convert("table", table)
    crib = doc.get("cribbing", required=False, default="noiseless")
    if isinstance(crib, dict):
        if set(crib) != {"Q"}:
            doc.fail("cribbing", 'an object must have the single key "Q"')
        crib = doc.convert("cribbing", lambda r: real_array(r["Q"]))
    elif crib not in ("noiseless", "none"):
        doc.fail("cribbing", 'must be "noiseless", "none" or {"Q": matrix}')
    try:
        return ch.CqMacSpec(t, crib)
    except QmacError as exc:
        key = "cribbing" if "cribbing" in str(exc) else "table"
        doc.fail(key, str(exc))


# --- ensembles ---------------------------------------------------------------

ENSEMBLE_KEYS = ("p_u", "p_uv", "p_x1", "p_x2", "theta", "zeta", "instrument", "p_x1x2")


def read_ensemble(path) -> ch.EnsembleSpec:
    return parse_ensemble(load(path))


def parse_ensemble(doc: _Doc) -> ch.EnsembleSpec:
    unknown = [k for k in doc.data if k not in ENSEMBLE_KEYS and k != "manifest"]
    if unknown:
        doc.fail(unknown[0], "unknown ensemble key")
    kw = {}
    for k in ("p_u", "p_uv", "p_x1", "p_x2", "p_x1x2"):
        kw[k] = doc.convert(k, real_array, required=k in ("p_x1", "p_x2"))
    for k in ("theta", "zeta"):
        kw[k] = doc.convert(k, _matrix_stack, required=False)
    kw["instrument"] = doc.convert("instrument", _instrument, required=False)
    try:
        return ch.EnsembleSpec(**kw)
    except QmacError as exc:
        msg = str(exc)
        key = next((k for k in ENSEMBLE_KEYS if k in msg and k in doc.data), "p_x1")
        doc.fail(key, msg)


def _instrument(raw) -> Instrument:
    ops = _matrix_stack(raw)
    return Instrument(ops.shape[1], tuple(enumerate(ops)))


def read_extra_inputs(path) -> list[np.ndarray]:
    """Joint input states ``theta_{A1 A0}`` for the robustness check."""
    doc = load(path)
    return list(doc.convert("inputs", _matrix_stack))


def parse_rates(text: str, count: Optional[int] = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"rates must be comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValidationError(f"expected {count} rates, got {len(vals)}")
    if any(not np.isfinite(v) or v < 0 for v in vals):
        raise ValidationError("rates must be finite and non-negative")
    return vals
