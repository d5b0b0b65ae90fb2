"""Hashed circular fingerprints and Tanimoto similarity.

The fingerprint is the classic iterative neighborhood scheme: every atom
starts from a hashed local invariant, then for each radius step its
identifier is rehashed together with the sorted (bond code, neighbor
identifier) pairs.  Every identifier seen at every radius sets one bit,
``identifier mod n_bits``.  Bits are binary (duplicate environments set a
bit once).

All hashing goes through the splitmix64 mixer in :mod:`sarfocus.rng`, so
fingerprints are bit-identical on every platform.  Frozen choices:

    - atom invariant tuple: (element, aromatic flag, formal charge,
      heavy-atom degree, hydrogen count)
    - bond codes: single 1, double 2, triple 3, aromatic 4
    - hex serialization is most-significant-bit first: bit 0 is the top bit
      of the first byte
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import hash_tuple
from .smiles import Molecule

_ALLOWED_WIDTHS = (512, 1024, 2048, 4096)

# Domain tags keep atom-level and iteration-level hashes disjoint.
_TAG_ATOM = 0x41544F4D   # "ATOM"
_TAG_ITER = 0x49544552   # "ITER"


class ParamMismatch(ValueError):
    """Fingerprints with different widths or radii are not comparable."""


class EmptyReferenceSet(ValueError):
    """A similarity reference set must contain at least one fingerprint."""


@dataclass(frozen=True)
class FingerprintParams:
    radius: int = 2
    n_bits: int = 2048

    def __post_init__(self) -> None:
        if self.n_bits not in _ALLOWED_WIDTHS:
            raise ValueError(f"n_bits must be one of {_ALLOWED_WIDTHS}")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width bit vector stored as an int bitmask (bit i = 1 << i)."""

    bits: int
    n_bits: int
    radius: int

    def popcount(self) -> int:
        return self.bits.bit_count()

    def set_bits(self) -> tuple[int, ...]:
        out = []
        b = self.bits
        while b:
            low = b & -b
            out.append(low.bit_length() - 1)
            b ^= low
        return tuple(out)

    def to_numpy(self) -> np.ndarray:
        arr = np.zeros(self.n_bits, dtype=np.uint8)
        for i in self.set_bits():
            arr[i] = 1
        return arr

    def to_hex(self) -> str:
        buf = bytearray(self.n_bits // 8)
        for i in self.set_bits():
            buf[i >> 3] |= 0x80 >> (i & 7)
        return buf.hex()

    @classmethod
    def from_hex(cls, hex_str: str, radius: int) -> "Fingerprint":
        data = bytes.fromhex(hex_str)
        n_bits = len(data) * 8
        if n_bits not in _ALLOWED_WIDTHS:
            raise ValueError(f"hex string encodes unsupported width {n_bits}")
        mask = 0
        for j, byte in enumerate(data):
            for k in range(8):
                if byte & (0x80 >> k):
                    mask |= 1 << (j * 8 + k)
        return cls(bits=mask, n_bits=n_bits, radius=radius)


def atom_invariant(element: str, aromatic: bool, charge: int, degree: int,
                   h_count: int) -> int:
    """Initial 64-bit atom identifier (radius 0)."""
    elem_code = int.from_bytes(element.encode("ascii"), "big")
    return hash_tuple(_TAG_ATOM, elem_code, int(aromatic), charge, degree,
                      h_count)


def morgan_fingerprint(m: Molecule, p: FingerprintParams) -> Fingerprint:
    """Compute the circular fingerprint of a parsed molecule."""
    adj = m.neighbors()
    ids = [
        atom_invariant(a.element, a.aromatic, a.formal_charge, len(adj[i]),
                       a.total_h)
        for i, a in enumerate(m.atoms)
    ]
    mask = 0
    for ident in ids:
        mask |= 1 << (ident % p.n_bits)
    for r in range(1, p.radius + 1):
        new_ids = []
        for i in range(len(ids)):
            pairs = sorted((order, ids[j]) for j, order in adj[i])
            flat: list[int] = [_TAG_ITER, r, ids[i]]
            for order, nid in pairs:
                flat.append(order)
                flat.append(nid)
            ident = hash_tuple(*flat)
            new_ids.append(ident)
            mask |= 1 << (ident % p.n_bits)
        ids = new_ids
    return Fingerprint(bits=mask, n_bits=p.n_bits, radius=p.radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|; 1.0 when both fingerprints are empty."""
    if a.n_bits != b.n_bits or a.radius != b.radius:
        raise ParamMismatch(
            f"cannot compare ({a.n_bits} bits, r{a.radius}) with "
            f"({b.n_bits} bits, r{b.radius})")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


def mean_tanimoto_to_set(q: Fingerprint, ref: list[Fingerprint]) -> float:
    """Arithmetic mean of tanimoto(q, r) over the reference set."""
    if not ref:
        raise EmptyReferenceSet("reference set is empty")
    values = np.array([tanimoto(q, r) for r in ref], dtype=np.float64)
    return float(np.mean(values))


def similarity_matrix(queries: list[Fingerprint],
                      refs: list[Fingerprint]) -> np.ndarray:
    """Pairwise Tanimoto matrix, queries x refs.

    ``np.mean(similarity_matrix(qs, refs)[i])`` reproduces
    :func:`mean_tanimoto_to_set` exactly (same values, same summation
    order), which the scan machinery relies on for determinism.
    """
    out = np.empty((len(queries), len(refs)), dtype=np.float64)
    for i, q in enumerate(queries):
        for j, r in enumerate(refs):
            out[i, j] = tanimoto(q, r)
    return out
