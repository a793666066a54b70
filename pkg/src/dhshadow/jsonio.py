"""JSON input with line numbers in every schema error, and output helpers."""
from __future__ import annotations

import json
import json.decoder
import json.scanner
import math

import numpy as np

from .betti import FilteredLocalSystem
from .errors import SchemaError
from .kms import HarmonicShadow, KmsPoint, KmsSpectrum


class LinedDict(dict):
    line = 0


class LinedList(list):
    line = 0


def _line_of(s: str, pos: int) -> int:
    return s.count("\n", 0, pos) + 1


class _LinedDecoder(json.JSONDecoder):
    """Decoder whose objects and arrays remember the line they start on."""

    def __init__(self, **kw):
        super().__init__(**kw)
        plain_object = self.parse_object
        plain_array = self.parse_array

        def parse_object(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None):
            s, end = s_and_end
            value, stop = plain_object(s_and_end, strict, scan_once, object_hook,
                                       object_pairs_hook, memo)
            out = LinedDict(value)
            out.line = _line_of(s, end - 1)
            return out, stop

        def parse_array(s_and_end, scan_once):
            s, end = s_and_end
            value, stop = plain_array(s_and_end, scan_once)
            out = LinedList(value)
            out.line = _line_of(s, end - 1)
            return out, stop

        self.parse_object = parse_object
        self.parse_array = parse_array
        self.scan_once = json.scanner.py_make_scanner(self)


def loads(text: str):
    try:
        return json.loads(text, cls=_LinedDecoder)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None


def load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def _where(node, parent=None) -> str:
    line = getattr(node, "line", 0) or getattr(parent, "line", 0)
    return f"line {line}" if line else "input"


def _field(obj, key, kind, parent=None, optional=False):
    if not isinstance(obj, dict):
        raise SchemaError(f"{_where(obj, parent)}: expected an object")
    if key not in obj:
        if optional:
            return None
        raise SchemaError(f"{_where(obj, parent)}: missing field {key!r}")
    value = obj[key]
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{_where(obj)}: field {key!r} must be an integer")
    elif kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)) \
                or not math.isfinite(value):
            raise SchemaError(f"{_where(obj)}: field {key!r} must be a finite number")
    elif kind == "str":
        if not isinstance(value, str):
            raise SchemaError(f"{_where(obj)}: field {key!r} must be a string")
    elif kind == "list":
        if not isinstance(value, list):
            raise SchemaError(f"{_where(obj)}: field {key!r} must be a list")
    return value


def _complex(node, parent) -> complex:
    if (not isinstance(node, list) or len(node) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in node)):
        raise SchemaError(f"{_where(node, parent)}: complex numbers are [re, im] pairs")
    z = complex(node[0], node[1])
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise SchemaError(f"{_where(node, parent)}: non-finite complex number")
    return z


def shadow_from_json(data) -> HarmonicShadow:
    rank = _field(data, "rank", "int")
    if rank < 1:
        raise SchemaError(f"{_where(data)}: rank must be >= 1")
    genus = _field(data, "genus", "int", optional=True)
    if genus is not None and genus < 0:
        raise SchemaError(f"{_where(data)}: genus must be >= 0")
    entries = _field(data, "punctures", "list")
    if not entries:
        raise SchemaError(f"{_where(entries, data)}: at least one puncture is required")
    punctures = []
    seen = set()
    for entry in entries:
        label = _field(entry, "label", "str", entries)
        if label in seen:
            raise SchemaError(f"{_where(entry)}: duplicate puncture label {label!r}")
        seen.add(label)
        spectrum = _field(entry, "spectrum", "list")
        if len(spectrum) != rank:
            raise SchemaError(
                f"{_where(spectrum, entry)}: puncture {label!r} has {len(spectrum)} KMS points, "
                f"expected {rank}")
        points = []
        for pt in spectrum:
            a = _field(pt, "a", "number", spectrum)
            alpha = _complex(_field(pt, "alpha", "list"), pt)
            points.append(KmsPoint(a, alpha))
        punctures.append((label, KmsSpectrum(rank, tuple(points))))
    return HarmonicShadow(rank, tuple(punctures), genus)


def load_shadow(path) -> HarmonicShadow:
    return shadow_from_json(load(path))


def shadow_to_json(shadow: HarmonicShadow) -> dict:
    out = {"rank": shadow.rank}
    if shadow.genus is not None:
        out["genus"] = shadow.genus
    out["punctures"] = [
        {"label": t, "spectrum": [{"a": x.a, "alpha": [x.alpha.real, x.alpha.imag]}
                                  for x in spectrum.points]}
        for t, spectrum in shadow.punctures]
    return out


def _matrix(node, r, parent) -> np.ndarray:
    if not isinstance(node, list) or len(node) != r:
        raise SchemaError(f"{_where(node, parent)}: expected {r} rows")
    rows = []
    for row in node:
        if not isinstance(row, list) or len(row) != r:
            raise SchemaError(f"{_where(row, node)}: expected {r} entries per row")
        rows.append([_complex(z, row) for z in row])
    return np.array(rows, dtype=complex)


def _flag(node, r, parent) -> np.ndarray:
    # a list of r basis vectors; vector j becomes column j
    if not isinstance(node, list) or len(node) != r:
        raise SchemaError(f"{_where(node, parent)}: a flag needs {r} basis vectors")
    cols = []
    for vec in node:
        if not isinstance(vec, list) or len(vec) != r:
            raise SchemaError(f"{_where(vec, node)}: basis vectors have {r} entries")
        cols.append([_complex(z, vec) for z in vec])
    F = np.array(cols, dtype=complex).T
    if np.linalg.matrix_rank(F) < r:
        raise SchemaError(f"{_where(node, parent)}: flag basis is not linearly independent")
    return F


def local_system_from_json(data) -> FilteredLocalSystem:
    r = _field(data, "rank", "int")
    if r < 1:
        raise SchemaError(f"{_where(data)}: rank must be >= 1")
    entries = _field(data, "punctures", "list")
    labels, gamma, flags = [], [], []
    for entry in entries:
        labels.append(_field(entry, "label", "str", entries))
        gamma.append(_matrix(_field(entry, "gamma", "list"), r, entry))
        flags.append(_flag(_field(entry, "flag", "list"), r, entry))
    a = [_matrix(m, r, data) for m in (_field(data, "a", "list", optional=True) or [])]
    b = [_matrix(m, r, data) for m in (_field(data, "b", "list", optional=True) or [])]
    framing = _field(data, "framing", "list", optional=True)
    framing = None if framing is None else _matrix(framing, r, data)
    try:
        return FilteredLocalSystem(r, tuple(labels), tuple(gamma), tuple(flags),
                                   tuple(a), tuple(b), framing)
    except SchemaError:
        raise
    except Exception as exc:
        raise SchemaError(f"{_where(data)}: {exc}") from None


def load_local_system(path) -> FilteredLocalSystem:
    return local_system_from_json(load(path))


def _pairs(M: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def local_system_to_json(L: FilteredLocalSystem) -> dict:
    out = {"rank": L.rank, "punctures": [
        {"label": t, "gamma": _pairs(g),
         "flag": [[[float(z.real), float(z.imag)] for z in F[:, j]] for j in range(L.rank)]}
        for t, g, F in zip(L.punctures, L.gamma, L.flags)]}
    if L.a:
        out["a"] = [_pairs(m) for m in L.a]
        out["b"] = [_pairs(m) for m in L.b]
    return out


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
