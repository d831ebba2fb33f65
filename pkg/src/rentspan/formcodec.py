"""Form body codec: percent-decoding and binding fields to answers.

The body format is application/x-www-form-urlencoded as the browsers of
the day produced it: fields separated by '&', '+' for space, %XX escapes
in either hex case, Latin-1 charset.  Parsing is strict where the paper
counted errors (malformed escapes, non-integer numerics, inverted or
out-of-range intervals, unknown districts) and tolerant where browsers
disagreed (missing '=', repeated fields, unknown names).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .intervals import Interval
from .model import Answers, FixedCostAnswer, TriState, default_answers
from .ruleset import Ruleset

FieldMap = List[Tuple[str, str]]

LANGUAGES = ("German", "English")

_INT_RE = re.compile(r"^[0-9]+$")
_MONEY_RE = re.compile(r"^[0-9]+(\.[0-9]{1,2})?$")
_HEX = "0123456789abcdefABCDEF"

# characters sent through unescaped when encoding
_SAFE = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_.*"
)


class ErrorCode(enum.Enum):
    BAD_ESCAPE = "bad percent escape"
    INTEGER_REQUIRED = "integer required"
    DECIMAL_REQUIRED = "decimal amount required"
    WRONG_INTERVAL = "wrong interval"
    OUT_OF_RANGE = "value outside allowed range"
    UNKNOWN_DISTRICT = "unknown district"
    BAD_TRISTATE = "expected Yes, No or ?"


class FormSyntaxError(ValueError):
    """User input the form grammar rejects; lands in the syntax-error bucket."""

    def __init__(self, code: ErrorCode, field_name: str = "", detail: str = ""):
        self.code = code
        self.field = field_name
        message = code.value
        if field_name:
            message = f"{field_name}: {message}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


def _percent_decode(raw: bytes, context: str) -> str:
    out = bytearray()
    i = 0
    n = len(raw)
    while i < n:
        byte = raw[i]
        if byte == 0x2B:  # '+'
            out.append(0x20)
            i += 1
        elif byte == 0x25:  # '%'
            if i + 2 >= n:
                raise FormSyntaxError(ErrorCode.BAD_ESCAPE, context, "truncated escape")
            hi, lo = chr(raw[i + 1]), chr(raw[i + 2])
            if hi not in _HEX or lo not in _HEX:
                raise FormSyntaxError(
                    ErrorCode.BAD_ESCAPE, context, f"%{hi}{lo} is not hexadecimal"
                )
            out.append(int(hi + lo, 16))
            i += 3
        else:
            out.append(byte)
            i += 1
    return out.decode("latin-1")


def decode_body(body: bytes) -> FieldMap:
    """Split a form body into decoded (name, value) pairs, order preserved."""
    if isinstance(body, str):
        body = body.encode("latin-1")
    pairs: FieldMap = []
    for segment in body.split(b"&"):
        if not segment:
            continue
        name_raw, _, value_raw = segment.partition(b"=")
        name = _percent_decode(name_raw, "field name")
        pairs.append((name, _percent_decode(value_raw, name)))
    return pairs


def _percent_encode(text: str) -> str:
    out = []
    for byte in text.encode("latin-1"):
        ch = chr(byte)
        if ch in _SAFE:
            out.append(ch)
        elif ch == " ":
            out.append("+")
        else:
            out.append(f"%{byte:02X}")
    return "".join(out)


# -- field schema -------------------------------------------------------------


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str  # language | int_min | int_max | money_min | money_max | district | tristate | applies
    dim: Optional[str] = None
    flag_id: Optional[str] = None
    flag_group: Optional[str] = None
    item_id: Optional[str] = None
    partner: Optional[str] = None
    bounds: Optional[Interval] = None
    choices: Tuple[str, ...] = ()


def build_schema(rs: Ruleset) -> List[FieldSpec]:
    """The field vocabulary for one ruleset, in canonical body order."""
    schema: List[FieldSpec] = [
        FieldSpec(name="Language", kind="language", choices=LANGUAGES)
    ]
    for prefix, dim, bounds in (
        ("M2", "size", rs.size_range),
        ("ZI", "rooms", rs.rooms_range),
        ("BJ", "year", rs.year_range),
    ):
        schema.append(
            FieldSpec(
                name=f"{prefix}_min", kind="int_min", dim=dim,
                partner=f"{prefix}_max", bounds=bounds,
            )
        )
        schema.append(
            FieldSpec(
                name=f"{prefix}_max", kind="int_max", dim=dim,
                partner=f"{prefix}_min", bounds=bounds,
            )
        )
    schema.append(
        FieldSpec(name="District", kind="district", choices=tuple(rs.districts))
    )
    for q in rs.flags:
        schema.append(
            FieldSpec(name=q.id, kind="tristate", flag_id=q.id, flag_group=q.group)
        )
    for item in rs.fixed_costs:
        bounds = item.range()
        schema.append(
            FieldSpec(
                name=f"FC_{item.id}_min", kind="money_min", item_id=item.id,
                partner=f"FC_{item.id}_max", bounds=bounds,
            )
        )
        schema.append(
            FieldSpec(
                name=f"FC_{item.id}_max", kind="money_max", item_id=item.id,
                partner=f"FC_{item.id}_min", bounds=bounds,
            )
        )
        schema.append(
            FieldSpec(name=f"FC_{item.id}_applies", kind="applies", item_id=item.id)
        )
    return schema


@dataclass
class BoundForm:
    answers: Answers
    language: str = "German"
    warnings: List[str] = field(default_factory=list)


def _parse_int(spec: FieldSpec, raw: str) -> Fraction:
    value = raw.strip()
    if not _INT_RE.match(value):
        raise FormSyntaxError(ErrorCode.INTEGER_REQUIRED, spec.name, repr(raw))
    result = Fraction(int(value))
    if spec.bounds is not None and not spec.bounds.contains(result):
        raise FormSyntaxError(
            ErrorCode.OUT_OF_RANGE, spec.name, f"{value} not in {spec.bounds}"
        )
    return result


def _parse_money(spec: FieldSpec, raw: str) -> Fraction:
    value = raw.strip()
    if not _MONEY_RE.match(value):
        raise FormSyntaxError(ErrorCode.DECIMAL_REQUIRED, spec.name, repr(raw))
    result = Fraction(value)
    if spec.bounds is not None and not spec.bounds.contains(result):
        raise FormSyntaxError(
            ErrorCode.OUT_OF_RANGE, spec.name, f"{value} not in {spec.bounds}"
        )
    return result


def _parse_tristate(spec: FieldSpec, raw: str) -> TriState:
    value = raw.strip()
    if value == "?":
        return TriState.UNKNOWN
    lowered = value.lower()
    if lowered in ("yes", "ja"):
        return TriState.YES
    if lowered in ("no", "nein"):
        return TriState.NO
    raise FormSyntaxError(ErrorCode.BAD_TRISTATE, spec.name, repr(raw))


def bind_fields(fields: FieldMap, schema: Sequence[FieldSpec], rs: Ruleset) -> BoundForm:
    """Bind decoded fields to Answers; missing fields stay fully open."""
    by_name = {spec.name: spec for spec in schema}
    values: Dict[str, str] = {}
    warnings: List[str] = []
    for name, value in fields:
        if name not in by_name:
            warnings.append(f"ignored unknown field {name!r}")
            continue
        if name in values:
            warnings.append(f"field {name!r} repeated; keeping the last value")
        if value == "":
            continue  # an emptied input counts as no answer
        values[name] = value

    answers = default_answers(rs)
    bound = BoundForm(answers=answers, warnings=warnings)

    # scalar fields first
    for spec in schema:
        raw = values.get(spec.name)
        if raw is None:
            continue
        if spec.kind == "language":
            if raw.strip().title() in LANGUAGES:
                bound.language = raw.strip().title()
            else:
                warnings.append(f"unsupported language {raw!r}; falling back to German")
        elif spec.kind == "district":
            if raw not in spec.choices:
                raise FormSyntaxError(ErrorCode.UNKNOWN_DISTRICT, spec.name, repr(raw))
            answers.district = raw
        elif spec.kind == "tristate":
            state = _parse_tristate(spec, raw)
            target = answers.house_flags if spec.flag_group == "house" else answers.flat_flags
            target[spec.flag_id] = state
        elif spec.kind == "applies":
            answers.fixed_costs[spec.item_id].applies = _parse_tristate(spec, raw)

    # min/max pairs: either side may be missing, the allowed bound fills in
    for spec in schema:
        if spec.kind not in ("int_min", "money_min"):
            continue
        max_spec = by_name[spec.partner]
        raw_min, raw_max = values.get(spec.name), values.get(max_spec.name)
        if raw_min is None and raw_max is None:
            continue
        parse = _parse_int if spec.kind == "int_min" else _parse_money
        lo = parse(spec, raw_min) if raw_min is not None else spec.bounds.lo
        hi = parse(max_spec, raw_max) if raw_max is not None else spec.bounds.hi
        if lo > hi:
            raise FormSyntaxError(
                ErrorCode.WRONG_INTERVAL, spec.name, f"min {lo} > max {hi}"
            )
        iv = Interval(lo, hi)
        if spec.kind == "int_min":
            setattr(answers, spec.dim, iv)
        else:
            answers.fixed_costs[spec.item_id].amount = iv
    return bound


def _amount_text(value: Fraction) -> str:
    """Exact decimal text for a money value (at most two places by construction)."""
    scaled = value * 100
    if scaled.denominator != 1:
        raise ValueError(f"amount {value} is not a whole number of hundredths")
    if value.denominator == 1:
        return str(value.numerator)
    sign = "-" if value < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(3, "0")
    return f"{sign}{digits[:-2]}.{digits[-2:]}"


def encode_answers(answers: Answers, schema: Sequence[FieldSpec]) -> bytes:
    """Answers back to a form body; unanswered fields are simply omitted.

    decode_body + bind_fields over the result reproduces the answers.
    """
    parts: List[str] = []

    def emit(name: str, value: str) -> None:
        parts.append(f"{_percent_encode(name)}={_percent_encode(value)}")

    for spec in schema:
        if spec.kind == "int_min":
            iv = getattr(answers, spec.dim)
            if iv is not None:
                emit(spec.name, str(iv.lo))
                emit(spec.partner, str(iv.hi))
        elif spec.kind == "money_min":
            answer = answers.fixed_costs.get(spec.item_id)
            if answer is not None and answer.amount is not None:
                emit(spec.name, _amount_text(answer.amount.lo))
                emit(spec.partner, _amount_text(answer.amount.hi))
        elif spec.kind == "district":
            if answers.district is not None:
                emit(spec.name, answers.district)
        elif spec.kind == "tristate":
            state = answers.flag(spec.flag_id)
            if state is not TriState.UNKNOWN:
                emit(spec.name, state.value)
        elif spec.kind == "applies":
            answer = answers.fixed_costs.get(spec.item_id)
            if answer is not None and answer.applies is not TriState.UNKNOWN:
                emit(spec.name, answer.applies.value)
    return "&".join(parts).encode("latin-1")
