"""
Typed value model for test inputs.

Every test input is held as a recursive typed value. Two serializations exist:
sim_text, a compact lossy rendering that similarity and prompts are computed
on, and the typed envelope codec (encode_typed / decode_typed), a lossless
JSON form used to hand inputs to the adapter and to identify values.
"""

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, ClassVar, Tuple, Union

from ..errors import CharArity, MalformedEnvelope, Unparseable

INT64_MIN = -2 ** 63
INT64_MAX = 2 ** 63 - 1


class Kind(str, Enum):
    BOOL = 'bool'
    INT = 'int'
    FLOAT = 'float'
    CHAR = 'char'
    STR = 'str'
    ARRAY = 'arr'
    OBJECT = 'obj'
    NULL = 'null'


# ======================================================
# Value Types
# ======================================================
@dataclass(frozen=True)
class TypedValue:
    kind: ClassVar[Kind]


@dataclass(frozen=True)
class BoolValue(TypedValue):
    kind: ClassVar[Kind] = Kind.BOOL
    value: bool

    def __post_init__(self):
        if not isinstance(self.value, bool):
            raise ValueError(f'Bool payload must be a bool, got {self.value!r}')


@dataclass(frozen=True)
class IntValue(TypedValue):
    kind: ClassVar[Kind] = Kind.INT
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise ValueError(f'Int payload must be an int, got {self.value!r}')
        if not INT64_MIN <= self.value <= INT64_MAX:
            raise ValueError(f'Int payload {self.value} outside the 64-bit range')


@dataclass(frozen=True)
class FloatValue(TypedValue):
    kind: ClassVar[Kind] = Kind.FLOAT
    value: float

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise ValueError(f'Float payload must be a float, got {self.value!r}')
        object.__setattr__(self, 'value', float(self.value))


@dataclass(frozen=True)
class CharValue(TypedValue):
    kind: ClassVar[Kind] = Kind.CHAR
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or len(self.value) != 1:
            raise CharArity(f'Char payload must hold exactly one character, got {self.value!r}')


@dataclass(frozen=True)
class StrValue(TypedValue):
    kind: ClassVar[Kind] = Kind.STR
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str):
            raise ValueError(f'Str payload must be text, got {self.value!r}')


@dataclass(frozen=True)
class ArrayValue(TypedValue):
    kind: ClassVar[Kind] = Kind.ARRAY
    items: Tuple[TypedValue, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'items', tuple(self.items))


def _named_entries(entries, what):
    entries = tuple((name, value) for name, value in entries)
    names = [name for name, _ in entries]
    if len(set(names)) != len(names):
        raise ValueError(f'{what} names must be unique, got {names}')
    return entries


@dataclass(frozen=True)
class ObjectValue(TypedValue):
    kind: ClassVar[Kind] = Kind.OBJECT
    entries: Tuple[Tuple[str, TypedValue], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'entries', _named_entries(self.entries, 'Object entry'))


@dataclass(frozen=True)
class NullValue(TypedValue):
    kind: ClassVar[Kind] = Kind.NULL


@dataclass(frozen=True)
class ParamTuple:
    """Parameters of the buggy function in declaration order."""
    params: Tuple[Tuple[str, TypedValue], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'params', _named_entries(self.params, 'Parameter'))

    def __len__(self):
        return len(self.params)

    @property
    def names(self):
        return [name for name, _ in self.params]

    def replace(self, index, value):
        """Return a copy with parameter `index` set to `value`."""
        params = list(self.params)
        params[index] = (params[index][0], value)
        return ParamTuple(params)


# ======================================================
# Conversion from plain Python data
# ======================================================
def from_python(obj: Any) -> TypedValue:
    """
    Convert plain Python data into a typed value.

    Strings always become Str; use CharValue directly for chars.
    """
    if obj is None:
        return NullValue()
    if isinstance(obj, TypedValue):
        return obj
    if isinstance(obj, bool):
        return BoolValue(obj)
    if isinstance(obj, int):
        return IntValue(obj)
    if isinstance(obj, float):
        return FloatValue(obj)
    if isinstance(obj, str):
        return StrValue(obj)
    if isinstance(obj, (list, tuple)):
        return ArrayValue(tuple(from_python(item) for item in obj))
    if isinstance(obj, dict):
        return ObjectValue(tuple((str(k), from_python(v)) for k, v in obj.items()))
    raise TypeError(f'Cannot convert {type(obj).__name__} to a typed value')


def params_of(**kwargs) -> ParamTuple:
    """Build a ParamTuple from keyword arguments, in the order given."""
    return ParamTuple(tuple((name, from_python(value)) for name, value in kwargs.items()))


# ======================================================
# Similarity text
# ======================================================
def _float_text(x: float) -> str:
    if math.isnan(x):
        return 'NaN'
    if math.isinf(x):
        return 'Infinity' if x > 0 else '-Infinity'
    return repr(x)


def _render(v: TypedValue, top: bool) -> str:
    if isinstance(v, StrValue):
        return v.value if top else json.dumps(v.value, ensure_ascii=False)
    if isinstance(v, CharValue):
        return v.value
    if isinstance(v, BoolValue):
        return 'true' if v.value else 'false'
    if isinstance(v, IntValue):
        return str(v.value)
    if isinstance(v, FloatValue):
        return _float_text(v.value)
    if isinstance(v, NullValue):
        return 'null'
    if isinstance(v, ArrayValue):
        return '[' + ','.join(_render(item, False) for item in v.items) + ']'
    if isinstance(v, ObjectValue):
        return '{' + ','.join(f'{name}:{_render(item, False)}' for name, item in v.entries) + '}'
    raise TypeError(f'Not a typed value: {v!r}')


def sim_text(v: Union[TypedValue, ParamTuple]) -> str:
    """
    Render a value or parameter tuple as compact similarity text.

    A bare Str, and each direct parameter of a ParamTuple, renders unquoted;
    Str nested in arrays or objects is JSON-quoted.
    """
    if isinstance(v, ParamTuple):
        return '{' + ','.join(f'{name}:{_render(item, True)}' for name, item in v.params) + '}'
    return _render(v, True)


# ======================================================
# Typed envelope codec
# ======================================================
def _node(v: TypedValue) -> dict:
    if isinstance(v, ArrayValue):
        return {'t': Kind.ARRAY.value, 'v': [_node(item) for item in v.items]}
    if isinstance(v, ObjectValue):
        return {'t': Kind.OBJECT.value, 'v': [[name, _node(item)] for name, item in v.entries]}
    if isinstance(v, NullValue):
        return {'t': Kind.NULL.value, 'v': None}
    if isinstance(v, TypedValue):
        return {'t': v.kind.value, 'v': v.value}
    raise TypeError(f'Not a typed value: {v!r}')


def to_envelope(v: Union[TypedValue, ParamTuple]):
    """Return the envelope as JSON-ready Python data."""
    if isinstance(v, ParamTuple):
        return {'t': 'params', 'v': [[name, _node(item)] for name, item in v.params]}
    return _node(v)


def encode_typed(v: Union[TypedValue, ParamTuple]) -> str:
    """Encode a value as compact typed-envelope JSON text."""
    return json.dumps(to_envelope(v), ensure_ascii=False, separators=(',', ':'))


def _entries(payload, tag):
    if not isinstance(payload, list):
        raise MalformedEnvelope(f'"{tag}" payload must be a list of [name, node] pairs')
    entries = []
    for entry in payload:
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str)):
            raise MalformedEnvelope(f'Bad "{tag}" entry: {entry!r}')
        entries.append((entry[0], _from_node(entry[1])))
    return entries


def _from_node(node) -> TypedValue:
    if not isinstance(node, dict) or set(node) != {'t', 'v'}:
        raise MalformedEnvelope(f'Envelope node must be {{"t":..,"v":..}}, got {node!r}')
    tag, payload = node['t'], node['v']
    try:
        if tag == 'bool' and isinstance(payload, bool):
            return BoolValue(payload)
        if tag == 'int' and isinstance(payload, int) and not isinstance(payload, bool):
            return IntValue(payload)
        if tag == 'float' and isinstance(payload, (int, float)) and not isinstance(payload, bool):
            return FloatValue(float(payload))
        if tag == 'char' and isinstance(payload, str):
            return CharValue(payload)
        if tag == 'str' and isinstance(payload, str):
            return StrValue(payload)
        if tag == 'arr' and isinstance(payload, list):
            return ArrayValue(tuple(_from_node(item) for item in payload))
        if tag == 'obj':
            return ObjectValue(tuple(_entries(payload, tag)))
        if tag == 'null' and payload is None:
            return NullValue()
    except CharArity:
        raise
    except ValueError as e:
        raise MalformedEnvelope(str(e)) from e
    raise MalformedEnvelope(f'Unknown tag or payload mismatch: {tag!r} / {payload!r}')


def from_envelope(node) -> Union[TypedValue, ParamTuple]:
    """Inverse of to_envelope."""
    if isinstance(node, dict) and node.get('t') == 'params':
        try:
            return ParamTuple(tuple(_entries(node.get('v'), 'params')))
        except CharArity:
            raise
        except ValueError as e:
            raise MalformedEnvelope(str(e)) from e
    return _from_node(node)


def decode_typed(text: str) -> Union[TypedValue, ParamTuple]:
    """Decode typed-envelope JSON text produced by encode_typed."""
    try:
        node = json.loads(text)
    except (json.JSONDecodeError, TypeError) as e:
        raise MalformedEnvelope(f'Invalid envelope JSON: {e}') from e
    return from_envelope(node)


def same_value(a, b) -> bool:
    """Identity comparison through the lossless encoding (NaN-safe)."""
    return encode_typed(a) == encode_typed(b)


# ======================================================
# Schema-guided parsing of mutated similarity text
# ======================================================
_INT_RE = re.compile(r'[+-]?\d+')
_FLOAT_RE = re.compile(r'[+-]?(?:NaN|Infinity|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)')


class _GuidedParser:
    """Recursive descent over sim_text, following the shape of a skeleton value."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, why):
        raise Unparseable(f'{why} at offset {self.pos} in {self.text!r}')

    def expect(self, token):
        if not self.text.startswith(token, self.pos):
            self.fail(f'expected {token!r}')
        self.pos += len(token)

    def parse(self, skeleton: TypedValue) -> TypedValue:
        if isinstance(skeleton, StrValue):
            if not self.text.startswith('"', self.pos):
                self.fail('expected a quoted string')
            try:
                value, end = json.JSONDecoder().raw_decode(self.text, self.pos)
            except json.JSONDecodeError:
                self.fail('bad string literal')
            self.pos = end
            return StrValue(value)
        if isinstance(skeleton, CharValue):
            if self.pos >= len(self.text):
                self.fail('expected a character')
            self.pos += 1
            return CharValue(self.text[self.pos - 1])
        if isinstance(skeleton, BoolValue):
            for literal, truth in (('true', True), ('false', False)):
                if self.text.startswith(literal, self.pos):
                    self.pos += len(literal)
                    return BoolValue(truth)
            self.fail('expected true/false')
        if isinstance(skeleton, NullValue):
            self.expect('null')
            return NullValue()
        if isinstance(skeleton, IntValue):
            match = _INT_RE.match(self.text, self.pos)
            if not match:
                self.fail('expected an integer')
            self.pos = match.end()
            value = int(match.group())
            if not INT64_MIN <= value <= INT64_MAX:
                self.fail('integer out of 64-bit range')
            return IntValue(value)
        if isinstance(skeleton, FloatValue):
            match = _FLOAT_RE.match(self.text, self.pos)
            if not match:
                self.fail('expected a number')
            self.pos = match.end()
            token = match.group()
            if token.lstrip('+-') == 'NaN':
                return FloatValue(math.nan)
            if token.lstrip('+-') == 'Infinity':
                return FloatValue(-math.inf if token.startswith('-') else math.inf)
            return FloatValue(float(token))
        if isinstance(skeleton, ArrayValue):
            return self.parse_array(skeleton)
        if isinstance(skeleton, ObjectValue):
            return self.parse_object(skeleton)
        raise TypeError(f'Not a typed value: {skeleton!r}')

    def parse_array(self, skeleton: ArrayValue) -> ArrayValue:
        self.expect('[')
        items = []
        if self.text.startswith(']', self.pos):
            self.pos += 1
            return ArrayValue(())
        if not skeleton.items:
            self.fail('no element shape known for a non-empty array')
        while True:
            index = min(len(items), len(skeleton.items) - 1)
            items.append(self.parse(skeleton.items[index]))
            if self.text.startswith(',', self.pos):
                self.pos += 1
                continue
            self.expect(']')
            return ArrayValue(tuple(items))

    def parse_object(self, skeleton: ObjectValue) -> ObjectValue:
        self.expect('{')
        entries = []
        for i, (name, sub) in enumerate(skeleton.entries):
            if i:
                self.expect(',')
            self.expect(f'{name}:')
            entries.append((name, self.parse(sub)))
        self.expect('}')
        return ObjectValue(tuple(entries))


def parse_guided(text: str, skeleton: TypedValue) -> TypedValue:
    """
    Reinterpret mutated similarity text using the type shape of `skeleton`.

    Raises:
        Unparseable: the text no longer fits the skeleton's type.
    """
    if isinstance(skeleton, StrValue):
        return StrValue(text)
    parser = _GuidedParser(text)
    value = parser.parse(skeleton)
    if parser.pos != len(text):
        parser.fail('trailing text')
    return value
