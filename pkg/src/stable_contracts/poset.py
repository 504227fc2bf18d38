"""Finite contract posets and their lattice of order ideals.

Contracts are identified by strings and indexed by their position in the
declared element order.  Subsets are represented as bit masks over those
indices, and a :class:`System` is a downward-closed subset (an order ideal)
of its poset: the universal notion of "a system of contracts".  A discrete
poset (empty order) recovers the classic case where every subset is a
system; graduated contracts are modelled as chains inside one poset.

All set algebra elsewhere in the package happens on the masks; the classes
here are thin immutable wrappers that keep the ideal invariant honest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import (
    CycleDetected,
    DomainTooLarge,
    DuplicateElement,
    NotAnIdeal,
    PosetMismatch,
    UnknownElement,
)

DEFAULT_IDEAL_CAP = 1 << 20


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of `mask` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class Poset:
    """A finite poset of contracts, with the order stored fully closed.

    `down[i]` is the bit mask of every element `j` with `j <= i`; the order
    is queryable in O(1) and `down[i]` doubles as the principal ideal of
    element `i`.  Construction validates reflexivity, transitivity and
    antisymmetry; use :func:`build_poset` to build one from cover pairs.

    Instances are immutable and safe to share across threads.
    """

    elements: tuple[str, ...]
    down: tuple[int, ...]

    def __post_init__(self):
        names = self.elements
        seen = set()
        for name in names:
            if name in seen:
                raise DuplicateElement(f"duplicate element {name!r}")
            seen.add(name)
        n = len(names)
        if len(self.down) != n:
            raise ValueError("down masks do not match the element count")
        full = (1 << n) - 1
        for i, m in enumerate(self.down):
            if m < 0 or m & ~full:
                raise ValueError("down mask references an unknown index")
            if not (m >> i) & 1:
                raise ValueError("order must be reflexive")
        for i, m in enumerate(self.down):
            for j in iter_bits(m):
                if self.down[j] & ~m:
                    raise ValueError("order must be transitively closed")
                if i != j and (self.down[j] >> i) & 1:
                    raise CycleDetected(
                        f"elements {names[j]!r} and {names[i]!r} are mutually comparable"
                    )
        object.__setattr__(self, "_pos", {x: i for i, x in enumerate(names)})
        object.__setattr__(self, "_ideal_masks", None)

    # ------------------------------------------------------------------
    # basic queries

    @property
    def n(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise UnknownElement(f"unknown element {name!r}") from None

    def leq(self, a: str, b: str) -> bool:
        """True iff contract `a` is below (or equal to) contract `b`."""
        return bool((self.down[self.index(b)] >> self.index(a)) & 1)

    @property
    def is_discrete(self) -> bool:
        return all(m == (1 << i) for i, m in enumerate(self.down))

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def covers(self) -> list[tuple[str, str]]:
        """The covering pairs (lower, upper) of the order, in index order."""
        out = []
        for j in range(self.n):
            strict = self.down[j] & ~(1 << j)
            for i in iter_bits(strict):
                between = strict & ~(1 << i)
                if not any((self.down[k] >> i) & 1 for k in iter_bits(between)):
                    out.append((self.elements[i], self.elements[j]))
        out.sort(key=lambda pair: (self.index(pair[0]), self.index(pair[1])))
        return out

    # ------------------------------------------------------------------
    # mask-level helpers (internal fast paths)

    def mask_of(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            mask |= 1 << self.index(name)
        return mask

    def names_of(self, mask: int) -> tuple[str, ...]:
        return tuple(self.elements[i] for i in iter_bits(mask))

    def _is_ideal_mask(self, mask: int) -> bool:
        return all(self.down[i] & ~mask == 0 for i in iter_bits(mask))

    def _down_closure_mask(self, mask: int) -> int:
        out = 0
        for i in iter_bits(mask):
            out |= self.down[i]
        return out

    # ------------------------------------------------------------------
    # systems

    def empty(self) -> "System":
        return System._unsafe(self, 0)

    def full(self) -> "System":
        return System._unsafe(self, self.full_mask)

    def ideal(self, names: Iterable[str]) -> "System":
        """Build a System from element names, rejecting non-ideals."""
        return System(self, self.mask_of(names))

    def is_ideal(self, names: Iterable[str]) -> bool:
        return self._is_ideal_mask(self.mask_of(names))

    def down_closure(self, names: Iterable[str]) -> "System":
        """The smallest ideal containing the given contracts."""
        return System._unsafe(self, self._down_closure_mask(self.mask_of(names)))

    def principal_ideal(self, name: str) -> "System":
        """Everything below (and including) one contract."""
        return System._unsafe(self, self.down[self.index(name)])

    def restrict(self, names: Iterable[str]) -> "Poset":
        """The sub-poset induced on `names`, kept in global element order."""
        idx = sorted({self.index(x) for x in names})
        local = {g: l for l, g in enumerate(idx)}
        down = []
        for g in idx:
            m = 0
            for h in iter_bits(self.down[g]):
                if h in local:
                    m |= 1 << local[h]
            down.append(m)
        return Poset(tuple(self.elements[g] for g in idx), tuple(down))

    # ------------------------------------------------------------------
    # enumeration

    def _all_ideal_masks(self, cap: int) -> list[int]:
        cached = self._ideal_masks
        if cached is None:
            # Grow along a linear extension; after each step the mask list is
            # exactly the set of ideals inside the prefix, so the cap check
            # catches oversize domains before any caller sees a result.
            order = sorted(range(self.n), key=lambda i: (self.down[i].bit_count(), i))
            masks = [0]
            for i in order:
                need = self.down[i] & ~(1 << i)
                bit = 1 << i
                masks.extend(m | bit for m in masks if m & need == need)
                if len(masks) > cap:
                    raise DomainTooLarge(len(masks), cap)
            masks.sort(key=lambda m: (m.bit_count(), tuple(iter_bits(m))))
            cached = masks
            object.__setattr__(self, "_ideal_masks", masks)
        if len(cached) > cap:
            raise DomainTooLarge(len(cached), cap)
        return cached

    def enumerate_ideals(self, cap: int = DEFAULT_IDEAL_CAP) -> list["System"]:
        """Every ideal of the poset, in canonical order.

        The order (ascending cardinality, ties broken lexicographically by
        element index) is part of the external contract: reports and traces
        built from it must be reproducible byte for byte.  Raises
        :class:`DomainTooLarge` before yielding anything when the ideal
        count exceeds `cap`.
        """
        return [System._unsafe(self, m) for m in self._all_ideal_masks(cap)]

    def ideal_count(self, cap: int = DEFAULT_IDEAL_CAP) -> int:
        return len(self._all_ideal_masks(cap))

    def __repr__(self):
        return f"Poset({list(self.elements)!r}, covers={self.covers()!r})"


@dataclass(frozen=True)
class System:
    """A downward-closed set of contracts of a fixed poset.

    The ideal invariant is enforced at construction; all binary operations
    require both operands to live on the same poset.
    """

    poset: Poset
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask & ~self.poset.full_mask:
            raise UnknownElement("mask references elements outside the poset")
        if not self.poset._is_ideal_mask(self.mask):
            missing = self.poset._down_closure_mask(self.mask) & ~self.mask
            raise NotAnIdeal(
                f"{{{', '.join(self.poset.names_of(self.mask))}}} is not downward "
                f"closed: missing {{{', '.join(self.poset.names_of(missing))}}}"
            )

    @classmethod
    def _unsafe(cls, poset: Poset, mask: int) -> "System":
        """Wrap a mask that is already known to be an ideal."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "poset", poset)
        object.__setattr__(obj, "mask", mask)
        return obj

    @property
    def names(self) -> tuple[str, ...]:
        return self.poset.names_of(self.mask)

    def __contains__(self, name: str) -> bool:
        return bool((self.mask >> self.poset.index(name)) & 1)

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return self.mask.bit_count()

    def __bool__(self):
        return self.mask != 0

    def _check_mate(self, other: "System"):
        if self.poset is not other.poset and self.poset != other.poset:
            raise PosetMismatch("systems belong to different posets")

    def __or__(self, other: "System") -> "System":
        self._check_mate(other)
        return System._unsafe(self.poset, self.mask | other.mask)

    def __and__(self, other: "System") -> "System":
        self._check_mate(other)
        return System._unsafe(self.poset, self.mask & other.mask)

    def __le__(self, other: "System") -> bool:
        self._check_mate(other)
        return self.mask & ~other.mask == 0

    def __repr__(self):
        return f"{{{', '.join(self.names)}}}"


def build_poset(
    elements: Iterable[str], covers: Iterable[tuple[str, str]] = ()
) -> Poset:
    """Build a poset from element names and (lower, upper) cover pairs.

    The stored order is the reflexive-transitive closure of the covers;
    inputs whose closure violates antisymmetry are rejected.
    """
    names = tuple(elements)
    seen = set()
    for name in names:
        if name in seen:
            raise DuplicateElement(f"duplicate element {name!r}")
        seen.add(name)
    pos = {x: i for i, x in enumerate(names)}
    n = len(names)
    down = [1 << i for i in range(n)]
    for lo, hi in covers:
        if lo not in pos:
            raise UnknownElement(f"unknown element {lo!r} in cover ({lo!r}, {hi!r})")
        if hi not in pos:
            raise UnknownElement(f"unknown element {hi!r} in cover ({lo!r}, {hi!r})")
        down[pos[hi]] |= 1 << pos[lo]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            merged = down[i]
            for j in iter_bits(down[i]):
                merged |= down[j]
            if merged != down[i]:
                down[i] = merged
                changed = True
    for i in range(n):
        for j in iter_bits(down[i]):
            if i != j and (down[j] >> i) & 1:
                raise CycleDetected(
                    f"covers create a cycle through {names[i]!r} and {names[j]!r}"
                )
    return Poset(names, tuple(down))
