"""Terminated texts over a byte alphabet.

Letters are stored as small integer codes so that the terminator sorts
below every letter:

    code 0   the terminator ``$``
    code 1   the gap marker ``#`` used by the modified string T'
    b + 2    byte value ``b``

Public positions are 1-based; ``Text.codes`` is a plain 0-based array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DOLLAR = 0
HASH = 1
LETTER_OFFSET = 2

APPEND_IF_MISSING = "append_if_missing"
REQUIRE_PRESENT = "require_present"


class TextError(ValueError):
    pass


class EmptyInputError(TextError):
    pass


class SentinelCollisionError(TextError):
    pass


def _smallest_unused(raw: bytes, skip=()) -> int:
    used = set(raw) | set(skip)
    for b in range(256):
        if b not in used:
            return b
    raise SentinelCollisionError("every byte value occurs in the input; no sentinel available")


@dataclass(frozen=True, eq=False)
class Text:
    """An immutable terminated text.

    ``dollar_byte`` and ``hash_byte`` record which raw byte values the two
    sentinels stand for when the text is written back out.
    """

    codes: np.ndarray
    dollar_byte: int = 0
    hash_byte: int = 1
    alphabet: frozenset = field(default=frozenset())

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.int32)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        if len(codes) == 0 or codes[-1] != DOLLAR:
            raise TextError("text must end with the terminator")
        if np.count_nonzero(codes == DOLLAR) != 1:
            raise TextError("terminator must occur exactly once")
        if not self.alphabet:
            letters = np.unique(codes[codes >= LETTER_OFFSET]) - LETTER_OFFSET
            object.__setattr__(self, "alphabet", frozenset(int(b) for b in letters))

    @property
    def n(self) -> int:
        return len(self.codes)

    def __len__(self):
        return len(self.codes)

    @property
    def payload(self) -> np.ndarray:
        return self.codes[:-1]

    def letter(self, i: int) -> int:
        """Code of T[i] (1-based)."""
        if not 1 <= i <= self.n:
            raise IndexError(f"position {i} outside [1, {self.n}]")
        return int(self.codes[i - 1])

    def payload_bytes(self) -> bytes:
        return encode_codes(self.payload, self.dollar_byte, self.hash_byte)

    def __str__(self):
        return render(self.codes)

    def __repr__(self):
        s = render(self.codes)
        if len(s) > 40:
            s = s[:37] + "..."
        return f"Text({s!r}, n={self.n})"

    @classmethod
    def from_bytes(cls, raw: bytes, dollar_byte: int | None = None, hash_byte: int | None = None) -> "Text":
        if dollar_byte is None:
            dollar_byte = _smallest_unused(raw)
        elif dollar_byte in raw:
            raise SentinelCollisionError(f"input contains the reserved terminator byte 0x{dollar_byte:02x}")
        if hash_byte is None:
            hash_byte = _smallest_unused(raw, skip=(dollar_byte,))
        elif hash_byte in raw or hash_byte == dollar_byte:
            raise SentinelCollisionError(f"input contains the reserved gap byte 0x{hash_byte:02x}")
        codes = np.empty(len(raw) + 1, dtype=np.int32)
        codes[:-1] = np.frombuffer(raw, dtype=np.uint8).astype(np.int32) + LETTER_OFFSET
        codes[-1] = DOLLAR
        return cls(codes, dollar_byte, hash_byte)

    @classmethod
    def from_string(cls, s: str, **kw) -> "Text":
        return cls.from_bytes(s.encode("utf-8"), **kw)


def load_text(path, sentinel_policy: str = APPEND_IF_MISSING,
              dollar_byte: int | None = None, hash_byte: int | None = None) -> Text:
    """Read a raw byte file into a Text.

    With ``append_if_missing`` the terminator is appended.  With
    ``require_present`` the last byte of the file is the terminator (it must
    equal ``dollar_byte`` when that is given) and must not occur elsewhere.
    """
    raw = Path(path).read_bytes()
    if not raw:
        raise EmptyInputError(f"{path}: empty input")
    if sentinel_policy == APPEND_IF_MISSING:
        return Text.from_bytes(raw, dollar_byte, hash_byte)
    if sentinel_policy == REQUIRE_PRESENT:
        last = raw[-1]
        if dollar_byte is not None and last != dollar_byte:
            raise TextError(f"{path}: last byte 0x{last:02x} is not the terminator 0x{dollar_byte:02x}")
        body = raw[:-1]
        if last in body:
            raise SentinelCollisionError(f"{path}: terminator byte 0x{last:02x} occurs before the end")
        if not body:
            raise EmptyInputError(f"{path}: no letters before the terminator")
        return Text.from_bytes(body, last, hash_byte)
    raise ValueError(f"unknown sentinel policy {sentinel_policy!r}")


def reverse_text(t: Text) -> Text:
    """Reverse the payload and terminate the result with a fresh ``$``."""
    codes = np.empty(t.n, dtype=np.int32)
    codes[:-1] = t.payload[::-1]
    codes[-1] = DOLLAR
    return Text(codes, t.dollar_byte, t.hash_byte, t.alphabet)


def to_codes(pattern) -> tuple:
    """Letter codes of a query pattern given as str, bytes or a code sequence."""
    if isinstance(pattern, str):
        pattern = pattern.encode("utf-8")
    if isinstance(pattern, (bytes, bytearray)):
        return tuple(b + LETTER_OFFSET for b in pattern)
    return tuple(int(c) for c in pattern)


def encode_codes(codes, dollar_byte: int = 0, hash_byte: int = 1) -> bytes:
    out = bytearray()
    for c in codes:
        c = int(c)
        if c == DOLLAR:
            out.append(dollar_byte)
        elif c == HASH:
            out.append(hash_byte)
        else:
            out.append(c - LETTER_OFFSET)
    return bytes(out)


def render(codes) -> str:
    """Human-readable form: sentinels become ``$``/``#``, bytes are UTF-8 decoded."""
    out = bytearray()
    for c in codes:
        c = int(c)
        if c == DOLLAR:
            out += b"$"
        elif c == HASH:
            out += b"#"
        else:
            out.append(c - LETTER_OFFSET)
    return out.decode("utf-8", errors="surrogateescape")
