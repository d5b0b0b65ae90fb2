"""SMILES line-notation parser producing a validated heavy-atom graph.

Supported grammar subset:
    - organic-subset atoms  B C N O P S F Cl Br I
    - aromatic lowercase    b c n o p s  (verbatim; no aromaticity perception,
      no kekulization)
    - bracket atoms         [isotope? symbol chirality? Hcount? charge? :class?]
      for any known element; isotopes are parsed and stored but ignored by
      every consumer in this package
    - bonds                 - = # :   (colon = aromatic)
    - ring closures         0-9 and %nn, reusable after closing
    - branches              parentheses

Deliberately unsupported:
    - multi-fragment input (``.``): rejected, salts must be stripped upstream,
      because fragment choice would silently change fingerprints
    - stereochemistry (``/ \\ @ @@``): tokens are accepted and dropped with a
      warning, since the 2D fingerprints downstream are stereo-blind
    - explicit hydrogen atoms (``[H]``, ``[2H]``): hydrogens are never graph
      nodes here; write them as H counts on the heavy atom instead

Implicit hydrogens are filled from standard valences (B 3; C 4; N 3,5; O 2;
P 3,5; S 2,4,6; halogens 1).  Aromatic atoms use the lowest standard valence
and contribute either one ring pi bond or a lone pair, whichever fits: this
gives benzene CH, pyridine N(0H), furan/thiophene heteroatoms with no
hydrogens, and fused-ring junction atoms with no hydrogens.  Bracket atoms
state their hydrogens explicitly and are exempt from the valence check.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

# Bond orders; the numeric values double as the fingerprint hash codes.
SINGLE, DOUBLE, TRIPLE, AROMATIC = 1, 2, 3, 4

_ORGANIC_TWO = ("Cl", "Br")
_ORGANIC_ONE = set("BCNOPSFI")
_AROMATIC_ORGANIC = set("bcnops")
_BRACKET_AROMATIC = {"b", "c", "n", "o", "p", "s", "se", "as"}

_STANDARD_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

# Elements accepted inside brackets.  H is intentionally absent.
_ELEMENTS = {
    "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si",
    "P", "S", "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co",
    "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb",
    "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os",
    "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn",
}


class SmilesParseError(ValueError):
    """Base class for every parse failure; carries the input and position."""

    def __init__(self, message: str, text: str = "", pos: int | None = None):
        self.text = text
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos} in {text!r})"
        super().__init__(message)


class UnclosedRing(SmilesParseError):
    """A ring-closure digit was opened but never re-encountered."""


class UnbalancedParenthesis(SmilesParseError):
    """Branch parentheses do not pair up."""


class UnknownAtomToken(SmilesParseError):
    """An atom token outside the supported grammar."""


class ValenceViolation(SmilesParseError):
    """Bond orders on an atom exceed every standard valence of its element."""


class MultiFragmentUnsupported(SmilesParseError):
    """Input contains a '.' fragment separator."""


class AromaticBondError(SmilesParseError):
    """An aromatic bond touches a non-aromatic atom."""


class StereoIgnoredWarning(UserWarning):
    """Raised once per parse when stereo tokens are dropped."""


@dataclass(frozen=True)
class Atom:
    """One heavy atom.  ``explicit_h`` is None for organic-subset atoms and
    the stated count (possibly 0) for bracket atoms, whose ``implicit_h`` is
    always 0."""

    element: str
    aromatic: bool
    formal_charge: int
    explicit_h: int | None
    implicit_h: int
    index: int
    isotope: int | None = None

    @property
    def total_h(self) -> int:
        return self.implicit_h + (self.explicit_h or 0)


@dataclass(frozen=True)
class Bond:
    """Edge between atom indices ``a < b`` with order SINGLE/DOUBLE/TRIPLE/AROMATIC."""

    a: int
    b: int
    order: int


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source: str

    def neighbors(self) -> list[list[tuple[int, int]]]:
        """Adjacency list: for each atom, (neighbor index, bond order) pairs."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append((bond.b, bond.order))
            adj[bond.b].append((bond.a, bond.order))
        return adj


@dataclass
class _PendingAtom:
    element: str
    aromatic: bool
    charge: int = 0
    explicit_h: int | None = None
    isotope: int | None = None


@dataclass
class _State:
    atoms: list[_PendingAtom] = field(default_factory=list)
    bonds: list[tuple[int, int, int]] = field(default_factory=list)
    bond_pairs: set[tuple[int, int]] = field(default_factory=set)
    prev: int | None = None
    pending: int | None = None  # bond order announced before next atom/closure
    branch_stack: list[int] = field(default_factory=list)
    open_rings: dict[int, tuple[int, int | None, int]] = field(default_factory=dict)
    stereo_seen: bool = False


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule`.

    Raises:
        UnclosedRing, UnbalancedParenthesis, UnknownAtomToken,
        ValenceViolation, MultiFragmentUnsupported: for the corresponding
            grammar/chemistry failures.
        SmilesParseError: for other malformed input.
    """
    stripped = text.strip()
    if not stripped:
        raise SmilesParseError("empty SMILES", text, 0)
    if not stripped.isascii():
        raise SmilesParseError("SMILES must be ASCII", text, 0)

    st = _State()
    i = 0
    n = len(stripped)
    while i < n:
        ch = stripped[i]
        if ch == ".":
            raise MultiFragmentUnsupported(
                "multi-fragment SMILES unsupported; strip salts upstream",
                stripped, i)
        if ch.isspace():
            raise SmilesParseError("embedded whitespace", stripped, i)
        if ch in "-=#:":
            if st.pending is not None:
                raise SmilesParseError("two consecutive bond symbols", stripped, i)
            st.pending = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}[ch]
            i += 1
        elif ch in "/\\":
            st.stereo_seen = True
            if st.pending is None:
                st.pending = SINGLE
            i += 1
        elif ch == "(":
            if st.prev is None:
                raise UnbalancedParenthesis("branch before any atom", stripped, i)
            if st.pending is not None:
                raise SmilesParseError("bond symbol before '('", stripped, i)
            st.branch_stack.append(st.prev)
            i += 1
        elif ch == ")":
            if not st.branch_stack:
                raise UnbalancedParenthesis("unmatched ')'", stripped, i)
            if st.pending is not None:
                raise SmilesParseError("dangling bond before ')'", stripped, i)
            st.prev = st.branch_stack.pop()
            i += 1
        elif ch.isdigit() or ch == "%":
            i = _ring_closure(stripped, i, st)
        elif ch == "[":
            i = _bracket_atom(stripped, i, st)
        elif ch.isalpha():
            i = _organic_atom(stripped, i, st)
        else:
            raise SmilesParseError(f"unexpected character {ch!r}", stripped, i)

    if st.pending is not None:
        raise SmilesParseError("dangling bond at end of input", stripped, n - 1)
    if st.branch_stack:
        raise UnbalancedParenthesis("unclosed '('", stripped, n - 1)
    if st.open_rings:
        digit, (_, _, pos) = sorted(st.open_rings.items())[0]
        raise UnclosedRing(f"ring closure {digit} never closed", stripped, pos)

    if st.stereo_seen:
        warnings.warn(
            "stereochemistry tokens ignored (2D fingerprints are stereo-blind)",
            StereoIgnoredWarning, stacklevel=2)

    return _finalize(stripped, st)


def heavy_atom_count(m: Molecule) -> int:
    """Number of atoms in the graph (hydrogens are never graph nodes)."""
    return len(m.atoms)


def _attach(st: _State, text: str, pos: int) -> None:
    """Bond the freshly appended atom to the previous one."""
    new_idx = len(st.atoms) - 1
    if st.prev is not None:
        order = st.pending
        if order is None:
            prev_arom = st.atoms[st.prev].aromatic
            order = AROMATIC if (prev_arom and st.atoms[new_idx].aromatic) else SINGLE
        _add_bond(st, st.prev, new_idx, order, text, pos)
    elif st.pending is not None:
        raise SmilesParseError("bond with no preceding atom", text, pos)
    st.pending = None
    st.prev = new_idx


def _add_bond(st: _State, a: int, b: int, order: int, text: str, pos: int) -> None:
    if a == b:
        raise SmilesParseError("ring bond from an atom to itself", text, pos)
    key = (min(a, b), max(a, b))
    if key in st.bond_pairs:
        raise SmilesParseError(f"duplicate bond between atoms {a} and {b}", text, pos)
    st.bond_pairs.add(key)
    st.bonds.append((key[0], key[1], order))


def _ring_closure(text: str, i: int, st: _State) -> int:
    if st.prev is None:
        raise SmilesParseError("ring closure before any atom", text, i)
    if text[i] == "%":
        if i + 2 >= len(text) or not text[i + 1 : i + 3].isdigit():
            raise SmilesParseError("'%' needs two digits", text, i)
        digit = int(text[i + 1 : i + 3])
        nxt = i + 3
    else:
        digit = int(text[i])
        nxt = i + 1

    if digit in st.open_rings:
        other, opened_order, _ = st.open_rings.pop(digit)
        order = st.pending if st.pending is not None else opened_order
        if (st.pending is not None and opened_order is not None
                and st.pending != opened_order):
            raise SmilesParseError(
                f"conflicting bond orders on ring closure {digit}", text, i)
        if order is None:
            both_arom = st.atoms[other].aromatic and st.atoms[st.prev].aromatic
            order = AROMATIC if both_arom else SINGLE
        _add_bond(st, other, st.prev, order, text, i)
    else:
        st.open_rings[digit] = (st.prev, st.pending, i)
    st.pending = None
    return nxt


def _organic_atom(text: str, i: int, st: _State) -> int:
    two = text[i : i + 2]
    if two in _ORGANIC_TWO:
        st.atoms.append(_PendingAtom(two, aromatic=False))
        _attach(st, text, i)
        return i + 2
    ch = text[i]
    if ch in _ORGANIC_ONE:
        st.atoms.append(_PendingAtom(ch, aromatic=False))
    elif ch in _AROMATIC_ORGANIC:
        st.atoms.append(_PendingAtom(ch.upper(), aromatic=True))
    else:
        raise UnknownAtomToken(f"unknown atom token {ch!r}", text, i)
    _attach(st, text, i)
    return i + 1


def _bracket_atom(text: str, i: int, st: _State) -> int:
    start = i
    i += 1  # consume '['
    end = text.find("]", i)
    if end < 0:
        raise SmilesParseError("unclosed '['", text, start)
    body = text[i:end]
    j = 0

    isotope = None
    while j < len(body) and body[j].isdigit():
        j += 1
    if j > 0:
        isotope = int(body[:j])

    # element symbol: two-letter first, then one-letter; lowercase = aromatic
    element = None
    aromatic = False
    for cand in (body[j : j + 2], body[j : j + 1]):
        if not cand or not cand.isalpha():
            continue
        if cand in _BRACKET_AROMATIC:
            element, aromatic = cand.capitalize(), True
            j += len(cand)
            break
        if cand.capitalize() in _ELEMENTS and cand[0].isupper():
            element = cand
            j += len(cand)
            break
    if element is None:
        raise UnknownAtomToken(
            f"unknown bracket atom in {text[start:end + 1]!r}", text, start)

    charge = 0
    explicit_h = 0
    while j < len(body):
        ch = body[j]
        if ch == "@":
            st.stereo_seen = True
            j += 1
            if j < len(body) and body[j] == "@":
                j += 1
        elif ch == "H":
            j += 1
            k = j
            while k < len(body) and body[k].isdigit():
                k += 1
            explicit_h = int(body[j:k]) if k > j else 1
            j = k
        elif ch in "+-":
            sign = 1 if ch == "+" else -1
            j += 1
            k = j
            while k < len(body) and body[k].isdigit():
                k += 1
            if k > j:
                charge = sign * int(body[j:k])
                j = k
            else:
                charge = sign
                while j < len(body) and body[j] == ch:
                    charge += sign
                    j += 1
        elif ch == ":":
            j += 1  # atom-class label: parsed, ignored
            while j < len(body) and body[j].isdigit():
                j += 1
        else:
            raise SmilesParseError(
                f"unexpected {ch!r} in bracket atom {text[start:end + 1]!r}",
                text, start + 1 + j)

    st.atoms.append(_PendingAtom(element, aromatic, charge, explicit_h, isotope))
    _attach(st, text, start)
    return end + 1


def _finalize(text: str, st: _State) -> Molecule:
    """Fill implicit hydrogens, enforce valence and aromaticity invariants."""
    order_sums = [0.0] * len(st.atoms)
    sigma = [0] * len(st.atoms)
    aromatic_deg = [0] * len(st.atoms)
    degree = [0] * len(st.atoms)
    for a, b, order in st.bonds:
        for x in (a, b):
            degree[x] += 1
            if order == AROMATIC:
                order_sums[x] += 1.5
                sigma[x] += 1
                aromatic_deg[x] += 1
            else:
                order_sums[x] += order
                sigma[x] += order

    atoms: list[Atom] = []
    for idx, pa in enumerate(st.atoms):
        if aromatic_deg[idx] and not pa.aromatic:
            raise AromaticBondError(
                f"aromatic bond on non-aromatic atom {idx} ({pa.element})", text)
        if pa.explicit_h is not None:  # bracket atom: H stated, no valence check
            implicit = 0
        else:
            valences = _STANDARD_VALENCES[pa.element]
            if pa.aromatic:
                lowest = valences[0]
                if lowest - sigma[idx] - 1 >= 0:
                    implicit = lowest - sigma[idx] - 1  # one pi bond
                elif lowest - sigma[idx] >= 0:
                    implicit = lowest - sigma[idx]  # lone-pair donor
                else:
                    raise ValenceViolation(
                        f"aromatic {pa.element} atom {idx} has sigma count "
                        f"{sigma[idx]} > valence {lowest}", text)
            else:
                total = int(order_sums[idx])
                fit = next((v for v in valences if v >= total), None)
                if fit is None:
                    raise ValenceViolation(
                        f"{pa.element} atom {idx} has bond-order sum {total} "
                        f"exceeding valences {valences}", text)
                implicit = fit - total
        atoms.append(Atom(
            element=pa.element, aromatic=pa.aromatic, formal_charge=pa.charge,
            explicit_h=pa.explicit_h, implicit_h=implicit, index=idx,
            isotope=pa.isotope))

    bonds = tuple(Bond(a, b, order) for a, b, order in st.bonds)
    return Molecule(atoms=tuple(atoms), bonds=bonds, source=text)
