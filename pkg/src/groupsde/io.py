"""JSON spec files for groups, automorphisms and measures.

Group spec::

    {"name": "Z4", "order": 4, "identity": 0,
     "cayley": [[0,1,2,3],[1,2,3,0],[2,3,0,1],[3,0,1,2]],
     "automorphisms": {"neg": [0,3,2,1]}}

``cayley`` may also be a flat row-major list of ``order**2`` indices.

Automorphism spec: ``{"name": "neg", "map": [0,3,2,1]}``.

Measure spec: a list of ``[index, "p/q"]`` pairs, or ``{"weights": [...]}``
holding such a list. Repeated indices are summed.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import GroupSdeError, InvalidMeasure, ValidationError
from .groups import Automorphism, FiniteGroup, build_automorphism, build_group, identity_automorphism
from .measures import RationalMeasure, format_rational, parse_rational

IDENTITY_NAMES = ("id", "identity")


class SpecError(ValidationError):
    """A spec file failed to load; the message carries file and line."""

    def __init__(self, path, message, reason=None, line=None):
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line
        if reason:
            self.reason = reason


def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(path, f"cannot read spec: {exc.strerror}", "spec_unreadable") from exc
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise SpecError(path, f"malformed JSON: {exc.msg} (column {exc.colno})", "spec_syntax", exc.lineno) from exc


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _pair_lines(text: str, depth_of_pair: int) -> list[int]:
    """Line of each [index, weight] pair, i.e. of each bracket opened at
    nesting ``depth_of_pair``."""
    lines, depth, line, in_str, escaped = [], 0, 1, False, False
    for ch in text:
        if ch == "\n":
            line += 1
        if in_str:
            escaped = ch == "\\" and not escaped
            if ch == '"' and not escaped:
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch in "[{":
            depth += 1
            if ch == "[" and depth == depth_of_pair:
                lines.append(line)
        elif ch in "]}":
            depth -= 1
    return lines


def _reject_unknown(path, text, doc: dict, allowed: set[str]) -> None:
    extra = sorted(set(doc) - allowed)
    if extra:
        raise SpecError(path, f"unknown field(s) {extra}", "spec_unknown_field", _line_of(text, extra[0]))


def _int_list(path, text, key, value) -> list[int]:
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise SpecError(path, f"'{key}' must be a list of integer indices", "spec_type", _line_of(text, key))
    return value


def _wrap(path, text, key, exc: GroupSdeError) -> SpecError:
    return SpecError(path, f"{key}: {exc}", exc.reason, _line_of(text, key))


def load_group(path) -> tuple[FiniteGroup, dict[str, Automorphism]]:
    """Load and validate a group spec; returns the group and its named automorphisms."""
    doc, text = _read_json(path)
    if not isinstance(doc, dict):
        raise SpecError(path, "group spec must be a JSON object", "spec_type")
    _reject_unknown(path, text, doc, {"name", "order", "identity", "cayley", "automorphisms"})
    for key in ("order", "identity", "cayley"):
        if key not in doc:
            raise SpecError(path, f"missing field '{key}'", "spec_missing_field")
    order = doc["order"]
    if not isinstance(order, int) or order < 1:
        raise SpecError(path, "'order' must be a positive integer", "spec_type", _line_of(text, "order"))
    raw = doc["cayley"]
    if isinstance(raw, list) and raw and all(isinstance(r, list) for r in raw):
        rows = [_int_list(path, text, "cayley", r) for r in raw]
    else:
        flat = _int_list(path, text, "cayley", raw)
        if len(flat) != order * order:
            raise SpecError(
                path, f"flat cayley has {len(flat)} entries, expected {order * order}",
                "spec_shape", _line_of(text, "cayley"),
            )
        rows = [flat[i * order:(i + 1) * order] for i in range(order)]
    if len(rows) != order or any(len(r) != order for r in rows):
        raise SpecError(path, f"cayley must be {order}x{order}", "spec_shape", _line_of(text, "cayley"))
    try:
        group = build_group(rows, doc["identity"], name=str(doc.get("name", Path(path).stem)))
    except GroupSdeError as exc:
        raise _wrap(path, text, "cayley", exc) from exc
    autos = {}
    named = doc.get("automorphisms", {})
    if not isinstance(named, dict):
        raise SpecError(path, "'automorphisms' must map names to permutations", "spec_type", _line_of(text, "automorphisms"))
    for name, perm in named.items():
        _int_list(path, text, name, perm)
        try:
            autos[name] = build_automorphism(group, perm, name=name)
        except GroupSdeError as exc:
            raise _wrap(path, text, name, exc) from exc
    return group, autos


def load_automorphism(spec: str | None, group: FiniteGroup, named: dict[str, Automorphism] | None = None) -> Automorphism:
    """Resolve ``--automorphism``: a name from the group spec, ``id``, or a spec file path."""
    named = named or {}
    if spec is None or spec in IDENTITY_NAMES and spec not in named:
        return identity_automorphism(group)
    if spec in named:
        return named[spec]
    path = Path(spec)
    if not path.exists():
        known = sorted(named) + ["id"]
        raise SpecError(spec, f"not a file and not a named automorphism (known: {known})", "spec_unreadable")
    doc, text = _read_json(path)
    if isinstance(doc, list):
        doc = {"map": doc}
    if not isinstance(doc, dict) or "map" not in doc:
        raise SpecError(path, "automorphism spec needs a 'map' field", "spec_missing_field")
    _reject_unknown(path, text, doc, {"name", "map"})
    perm = _int_list(path, text, "map", doc["map"])
    try:
        return build_automorphism(group, perm, name=str(doc.get("name", path.stem)))
    except GroupSdeError as exc:
        raise _wrap(path, text, "map", exc) from exc


def _bad_entry(i: int, message: str) -> InvalidMeasure:
    exc = InvalidMeasure(f"entry {i}: {message}")
    exc.entry = i
    return exc


def parse_measure_pairs(pairs, group: FiniteGroup) -> RationalMeasure:
    weights: dict[int, Fraction] = {}
    for i, pair in enumerate(pairs):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise _bad_entry(i, "is not an [index, \"p/q\"] pair")
        g, w = pair
        if not isinstance(g, int) or isinstance(g, bool) or not 0 <= g < group.order:
            raise _bad_entry(i, f"index {g!r} outside 0..{group.order - 1}")
        if not isinstance(w, (str, int)) or isinstance(w, bool):
            raise _bad_entry(i, f"weight must be a \"p/q\" string, got {w!r}")
        try:
            q = parse_rational(w)
        except InvalidMeasure as exc:
            raise _bad_entry(i, str(exc)) from None
        if q < 0:
            raise _bad_entry(i, f"negative weight {format_rational(q)} at index {g}")
        weights[g] = weights.get(g, Fraction(0)) + q
    total = sum(weights.values(), Fraction(0))
    if total != 1:
        raise InvalidMeasure(f"weights sum to {format_rational(total)}, not 1")
    return RationalMeasure.from_dict(group, weights)


def load_measure(path, group: FiniteGroup) -> RationalMeasure:
    doc, text = _read_json(path)
    key = "weights"
    pair_depth = 3 if isinstance(doc, dict) else 2
    if isinstance(doc, dict):
        _reject_unknown(path, text, doc, {"weights", "name"})
        if key not in doc:
            raise SpecError(path, "measure spec needs a 'weights' field", "spec_missing_field")
        doc = doc[key]
    if not isinstance(doc, list):
        raise SpecError(path, "measure spec must be a list of [index, \"p/q\"] pairs", "spec_type")
    try:
        return parse_measure_pairs(doc, group)
    except (GroupSdeError, ValueError, ZeroDivisionError) as exc:
        reason = getattr(exc, "reason", "invalid_measure")
        entry = getattr(exc, "entry", None)
        lines = _pair_lines(text, pair_depth) if entry is not None else []
        line = lines[entry] if entry is not None and entry < len(lines) else _line_of(text, key)
        raise SpecError(path, str(exc), reason, line) from exc


def group_to_doc(group: FiniteGroup, autos: dict[str, Automorphism] | None = None) -> dict:
    doc = {
        "name": group.name,
        "order": group.order,
        "identity": group.identity,
        "cayley": [list(r) for r in group.cayley],
    }
    if autos:
        doc["automorphisms"] = {n: list(a.map) for n, a in autos.items()}
    return doc


def measure_to_doc(mu: RationalMeasure) -> list:
    return [[g, format_rational(w)] for g, w in mu.items()]
