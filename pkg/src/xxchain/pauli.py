"""Exact signed Pauli-string arithmetic on n qubits.

Strings are stored as X/Z bitmasks plus a power of i, so products and
commutation checks are O(1) bit operations.  Site j corresponds to bit j
of the masks and to the j-th character of the letter representation, so
"IIX" puts the X on site 2.  A semicolon in the text form is a display-only
chain separator and is ignored on parsing.

Phase convention: a string with masks (x, z) and phase power p represents

    i**p * prod_j  i**(x_j z_j) X^{x_j} Z^{z_j}

so every letter (I, X, Y, Z) is Hermitian and ``phase`` is one of
+1, -1, +i, -i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

__all__ = [
    "PauliError",
    "PauliString",
    "parse",
    "format_string",
    "multiply",
    "multiply_all",
    "commutes",
    "identity",
    "from_sites",
]

_LETTER_TO_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_XZ_TO_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}
_PREFIX_PHASE = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}


class PauliError(ValueError):
    """Malformed Pauli text or mismatched operand sizes."""


@dataclass(frozen=True)
class PauliString:
    """Signed tensor product of I/X/Y/Z letters over ``n`` qubits."""

    n: int
    x: int
    z: int
    phase_pow: int = 0  # phase = i**phase_pow, reduced mod 4

    def __post_init__(self):
        if self.n <= 0:
            raise PauliError(f"need at least one qubit, got n={self.n}")
        mask = (1 << self.n) - 1
        object.__setattr__(self, "x", self.x & mask)
        object.__setattr__(self, "z", self.z & mask)
        object.__setattr__(self, "phase_pow", self.phase_pow % 4)

    @property
    def phase(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase_pow]

    @property
    def letters(self) -> str:
        return "".join(
            _XZ_TO_LETTER[(self.x >> j) & 1, (self.z >> j) & 1] for j in range(self.n)
        )

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_z_type(self) -> bool:
        """True when every non-identity letter is Z."""
        return self.x == 0

    def unsigned(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, 0)

    def __str__(self) -> str:
        return format_string(self)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)


def identity(n: int) -> PauliString:
    return PauliString(n, 0, 0, 0)


def from_sites(n: int, sites: Mapping[int, str], phase_pow: int = 0) -> PauliString:
    """Build a string from a {site index: letter} mapping."""
    x = z = 0
    for site, letter in sites.items():
        if not 0 <= site < n:
            raise PauliError(f"site {site} outside 0..{n - 1}")
        try:
            xb, zb = _LETTER_TO_XZ[letter]
        except KeyError:
            raise PauliError(f"unknown Pauli letter {letter!r}") from None
        x |= xb << site
        z |= zb << site
    return PauliString(n, x, z, phase_pow)


def parse(text: str, n_qubits: int | None = None) -> PauliString:
    """Parse letters with optional sign prefix and ';' separators.

    Raises PauliError on characters outside {I,X,Y,Z,;} or when the letter
    count disagrees with ``n_qubits``.
    """
    body = text.strip()
    phase_pow = 0
    for prefix in ("-i", "+i", "i", "-", "+"):
        if body.startswith(prefix):
            phase_pow = _PREFIX_PHASE[prefix]
            body = body[len(prefix):]
            break
    body = body.replace(";", "")
    if not body:
        raise PauliError(f"no Pauli letters in {text!r}")
    if n_qubits is not None and len(body) != n_qubits:
        raise PauliError(
            f"{text!r} has {len(body)} letters, expected {n_qubits}"
        )
    x = z = 0
    for j, letter in enumerate(body):
        if letter not in _LETTER_TO_XZ:
            raise PauliError(f"bad character {letter!r} in {text!r}")
        xb, zb = _LETTER_TO_XZ[letter]
        x |= xb << j
        z |= zb << j
    return PauliString(len(body), x, z, phase_pow)


def format_string(p: PauliString, groups: Iterable[int] | None = None) -> str:
    """Render a string, optionally ';'-separated into chain groups."""
    letters = p.letters
    if groups is not None:
        parts = []
        pos = 0
        for size in groups:
            parts.append(letters[pos:pos + size])
            pos += size
        if pos != p.n:
            raise PauliError(f"groups {tuple(groups)} do not cover {p.n} qubits")
        letters = ";".join(parts)
    return _PHASE_PREFIX[p.phase_pow] + letters


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Group product a*b with exact phase tracking."""
    if a.n != b.n:
        raise PauliError(f"size mismatch: {a.n} vs {b.n} qubits")
    x = a.x ^ b.x
    z = a.z ^ b.z
    # Per-site phase from i^{x1 z1} X Z ordering; see module docstring.
    extra = (
        (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        + 2 * (a.z & b.x).bit_count()
        - (x & z).bit_count()
    )
    return PauliString(a.n, x, z, a.phase_pow + b.phase_pow + extra)


def multiply_all(factors: Iterable[PauliString], n: int | None = None) -> PauliString:
    """Left-to-right product of a sequence of strings."""
    result = None
    for f in factors:
        result = f if result is None else multiply(result, f)
    if result is None:
        if n is None:
            raise PauliError("empty product needs an explicit qubit count")
        return identity(n)
    return result


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff ab = ba (symplectic parity test)."""
    if a.n != b.n:
        raise PauliError(f"size mismatch: {a.n} vs {b.n} qubits")
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) % 2 == 0
