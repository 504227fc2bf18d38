"""Choice functions on the ideal lattice: families, axioms, derived operators.

A choice function maps every ideal A to a sub-ideal C(A) <= A.  The package
works with *Plott functions*: choice functions satisfying

  consistency       C(A) <= B <= A  implies  C(A) = C(B)
  substitutability  A <= B          implies  A & C(B) <= C(A)

which together are equivalent to path independence, C(A|B) = C(C(A)|B).

Three concrete families are provided.  :class:`TableChoice` stores an
explicit ideal-to-ideal map, :class:`QuotaChoice` keeps the top elements of
a strict priority list on a discrete poset, and :class:`AggregateChoice`
glues independent choice functions over an order-disjoint partition, which
is how a many-agent side of a market is reduced to a single function.

Derived operators live on the base class: the desirability operator
D(A) = {e : e in C(A | <e>)} and the Blair revealed-preference relation
A <= B iff C(A|B) <= B.  Evaluation is pure and memoized per instance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DomainTooLarge,
    DuplicateElement,
    InternalInvariant,
    NotAnIdeal,
    NotAPartition,
    OrderCrossesParts,
    PlottFailed,
    PosetMismatch,
    QuotaOnNontrivialPoset,
    TableIncomplete,
    UnknownElement,
    ValueNotIdeal,
    ValueNotSubset,
)
from .poset import DEFAULT_IDEAL_CAP, Poset, System, iter_bits

# Quota families are re-validated exhaustively at construction when the
# ideal lattice is at most this large; beyond it they are trusted (the
# family is substitutable and consistent by a standard argument).
QUOTA_VALIDATION_CAP = 512

# Largest element count for which the vectorized axiom scan is used; wider
# masks do not fit an int64 lane and fall back to the pure-Python scan.
_VECTOR_MAX_ELEMENTS = 20

LAW_SUBSET = "choice-subset"
LAW_IDEAL = "choice-ideal"
LAW_CONSISTENCY = "consistency"
LAW_SUBSTITUTABILITY = "substitutability"
LAW_UNION_BOUND = "union-bound"
LAW_PATH_INDEPENDENCE = "path-independence"

_PAIR_LAWS = (LAW_CONSISTENCY, LAW_SUBSTITUTABILITY, LAW_UNION_BOUND, LAW_PATH_INDEPENDENCE)


class Validation(enum.Enum):
    UNCHECKED = "unchecked"
    VERIFIED = "verified"
    FAILED = "failed"


@dataclass(frozen=True)
class PlottWitness:
    """A reproducible counterexample to one choice law."""

    law: str
    a: System
    choice_a: System
    b: System | None = None
    choice_b: System | None = None

    def __repr__(self):
        if self.b is None:
            return f"{self.law}: A={self.a}, C(A)={self.choice_a}"
        return (
            f"{self.law}: A={self.a}, B={self.b}, "
            f"C(A)={self.choice_a}, C(B)={self.choice_b}"
        )


@dataclass(frozen=True)
class PlottReport:
    """Outcome of exhaustively checking the choice axioms over all ideals."""

    consistency_ok: bool
    substitutability_ok: bool
    ideal_valued_ok: bool
    witnesses: tuple[PlottWitness, ...]
    checked_ideals: int
    checked_pairs: int

    @property
    def ok(self) -> bool:
        return self.consistency_ok and self.substitutability_ok and self.ideal_valued_ok

    def summary(self) -> str:
        if self.ok:
            return f"all axioms hold on {self.checked_ideals} ideals"
        first = self.witnesses[0]
        return f"violated ({first!r})"


class ChoiceFunction:
    """Base class: a deterministic ideal-to-ideal selector.

    Subclasses implement `_compute(mask) -> mask`; the base class provides
    memoized evaluation, the desirability operator, the Blair relation and
    exhaustive axiom validation.  Instances are immutable apart from the
    internal caches, so concurrent evaluation is safe.
    """

    family = "abstract"

    def __init__(self, poset: Poset):
        self.poset = poset
        self._choice_cache: dict[int, int] = {}
        self._desire_cache: dict[int, int] = {}
        self._validation = Validation.UNCHECKED
        self._report: PlottReport | None = None

    # ------------------------------------------------------------------
    # mask-level evaluation

    def _compute(self, mask: int) -> int:
        raise NotImplementedError

    def _choose_mask(self, mask: int) -> int:
        cache = self._choice_cache
        out = cache.get(mask)
        if out is None:
            out = self._compute(mask)
            cache[mask] = out
        return out

    def _desire_mask(self, mask: int) -> int:
        cache = self._desire_cache
        out = cache.get(mask)
        if out is None:
            down = self.poset.down
            out = 0
            for i in range(self.poset.n):
                if (self._choose_mask(mask | down[i]) >> i) & 1:
                    out |= 1 << i
            cache[mask] = out
        return out

    # ------------------------------------------------------------------
    # public surface

    def _check_system(self, a: System):
        if a.poset is not self.poset and a.poset != self.poset:
            raise PosetMismatch("system belongs to a different poset")

    def choose(self, a: System) -> System:
        """C(A): the contracts kept out of the ideal `a`."""
        self._check_system(a)
        return System._unsafe(self.poset, self._choose_mask(a.mask))

    def desirability(self, a: System) -> System:
        """D(A): contracts the agent would keep if offered on top of `a`.

        D(A) = {e : e in C(A | <e>)}; it is an ideal and satisfies
        C(A) = A & D(A).  For Plott functions it is antitone.
        """
        self._check_system(a)
        return System(self.poset, self._desire_mask(a.mask))

    def blair_leq(self, a: System, b: System) -> bool:
        """The Blair revealed-preference relation: C(A|B) <= B."""
        self._check_system(a)
        self._check_system(b)
        return self._choose_mask(a.mask | b.mask) & ~b.mask == 0

    @property
    def validation(self) -> Validation:
        return self._validation

    @property
    def report(self) -> PlottReport | None:
        return self._report

    def _mark(self, validation: Validation, report: PlottReport | None = None):
        self._validation = validation
        if report is not None:
            self._report = report

    def validate_plott(self, cap: int = DEFAULT_IDEAL_CAP) -> PlottReport:
        """Exhaustively check the choice axioms over every ideal pair.

        Checks C(A) <= A and ideal-valuedness on every ideal, consistency
        and substitutability on the relevant pairs, and the derived union
        laws C(A|B) <= C(A)|B and C(A|B) = C(C(A)|B) on all pairs.  Updates
        the stored validation status.
        """
        masks = self.poset._all_ideal_masks(cap)
        choice = {m: self._choose_mask(m) for m in masks}
        if self.poset.n <= _VECTOR_MAX_ELEMENTS:
            counts, best = _scan_laws_vector(masks, choice, self.poset.n)
        else:
            counts, best = _scan_laws_python(masks, choice)
        report = self._assemble_report(masks, choice, counts, best)
        self._mark(Validation.VERIFIED if report.ok else Validation.FAILED, report)
        return report

    def _assemble_report(self, masks, choice, counts, best) -> PlottReport:
        core_clean = all(
            counts[law] == 0
            for law in (LAW_SUBSET, LAW_IDEAL, LAW_CONSISTENCY, LAW_SUBSTITUTABILITY)
        )
        derived_dirty = counts[LAW_UNION_BOUND] or counts[LAW_PATH_INDEPENDENCE]
        if core_clean and derived_dirty:
            raise InternalInvariant(
                "derived union laws failed although the defining axioms hold"
            )
        witnesses = []
        for law in (LAW_SUBSET, LAW_IDEAL, *_PAIR_LAWS):
            if counts[law] == 0:
                continue
            a, b = best[law]
            sys_a = System._unsafe(self.poset, a)
            if b is None:
                witnesses.append(
                    PlottWitness(law, sys_a, System._unsafe(self.poset, choice[a]))
                )
            else:
                witnesses.append(
                    PlottWitness(
                        law,
                        sys_a,
                        System._unsafe(self.poset, choice[a]),
                        System._unsafe(self.poset, b),
                        System._unsafe(self.poset, choice[b]),
                    )
                )
        return PlottReport(
            consistency_ok=counts[LAW_CONSISTENCY] == 0,
            substitutability_ok=counts[LAW_SUBSTITUTABILITY] == 0,
            ideal_valued_ok=counts[LAW_SUBSET] == 0 and counts[LAW_IDEAL] == 0,
            witnesses=tuple(witnesses),
            checked_ideals=len(masks),
            checked_pairs=len(masks) * len(masks),
        )

    def params(self) -> dict:
        raise NotImplementedError

    def __hash__(self):
        return hash((self.family, self.poset, self._param_key()))

    def __eq__(self, other):
        return (
            isinstance(other, ChoiceFunction)
            and self.family == other.family
            and self.poset == other.poset
            and self._param_key() == other._param_key()
        )

    def _param_key(self):
        raise NotImplementedError


# ----------------------------------------------------------------------
# axiom scan engines

def _scan_laws_python(masks: Sequence[int], choice: dict[int, int]):
    """Reference scan of the choice laws; quadratic in the ideal count."""
    counts = {law: 0 for law in (LAW_SUBSET, LAW_IDEAL, *_PAIR_LAWS)}
    best: dict[str, tuple] = {}
    score: dict[str, int] = {}
    ideal_set = set(masks)

    def note(law, a, b, weight):
        counts[law] += 1
        if law not in best or weight < score[law]:
            best[law] = (a, b)
            score[law] = weight

    for a in masks:
        ca = choice[a]
        if ca & ~a:
            note(LAW_SUBSET, a, None, a.bit_count())
        if ca not in ideal_set:
            note(LAW_IDEAL, a, None, a.bit_count())
    broken_values = counts[LAW_SUBSET] or counts[LAW_IDEAL]
    for a in masks:
        ca = choice[a]
        pa = a.bit_count()
        for b in masks:
            cb = choice[b]
            u = a | b
            cu = choice[u]
            w = pa + b.bit_count()
            if a & ~b == 0 and (a & cb) & ~ca:
                note(LAW_SUBSTITUTABILITY, a, b, w)
            if ca & ~b == 0 and b & ~a == 0 and cb != ca:
                note(LAW_CONSISTENCY, a, b, w)
            if cu & ~(ca | b):
                note(LAW_UNION_BOUND, a, b, w)
            if not broken_values and choice.get(ca | b, -1) != cu:
                note(LAW_PATH_INDEPENDENCE, a, b, w)
    return counts, best


def _scan_laws_vector(masks: Sequence[int], choice: dict[int, int], n: int, chunk: int = 512):
    """Vectorized scan; identical outcome to :func:`_scan_laws_python`."""
    k = len(masks)
    arr = np.array(masks, dtype=np.int64)
    carr = np.array([choice[m] for m in masks], dtype=np.int64)
    counts = {law: 0 for law in (LAW_SUBSET, LAW_IDEAL, *_PAIR_LAWS)}
    best: dict[str, tuple] = {}
    score: dict[str, int] = {}
    pc = np.array([m.bit_count() for m in masks], dtype=np.int64)

    lookup = np.full(1 << n, -1, dtype=np.int64)
    lookup[arr] = np.arange(k, dtype=np.int64)

    def note_vec(law, viol, row_off, weights):
        hits = int(viol.sum())
        if not hits:
            return
        counts[law] += hits
        masked = np.where(viol, weights, np.iinfo(np.int64).max)
        flat = int(np.argmin(masked))
        i, j = divmod(flat, viol.shape[1])
        w = int(masked[i, j])
        if law not in best or w < score[law]:
            best[law] = (masks[row_off + i], masks[j])
            score[law] = w

    subset_viol = (carr & ~arr) != 0
    ideal_viol = lookup[carr] < 0
    for law, viol in ((LAW_SUBSET, subset_viol), (LAW_IDEAL, ideal_viol)):
        hits = int(viol.sum())
        if hits:
            counts[law] = hits
            order = np.where(viol)[0]
            i = int(order[np.argmin(pc[order])])
            best[law] = (masks[i], None)
    if counts[LAW_IDEAL]:
        # Choice values stray outside the lattice; the indexed path laws are
        # meaningless, so defer to the reference scan.
        return _scan_laws_python(masks, choice)

    B = arr[None, :]
    CB = carr[None, :]
    for lo in range(0, k, chunk):
        hi = min(lo + chunk, k)
        A = arr[lo:hi, None]
        CA = carr[lo:hi, None]
        U = A | B
        CU = carr[lookup[U]]
        weights = pc[lo:hi, None] + pc[None, :]
        sub = (A & ~B) == 0
        note_vec(LAW_SUBSTITUTABILITY, sub & (((A & CB) & ~CA) != 0), lo, weights)
        cond = ((CA & ~B) == 0) & ((B & ~A) == 0)
        note_vec(LAW_CONSISTENCY, cond & (CB != CA), lo, weights)
        note_vec(LAW_UNION_BOUND, (CU & ~(CA | B)) != 0, lo, weights)
        note_vec(LAW_PATH_INDEPENDENCE, CU != carr[lookup[CA | B]], lo, weights)
    return counts, best


# ----------------------------------------------------------------------
# families

class TableChoice(ChoiceFunction):
    """A choice function given by an explicit map from every ideal."""

    family = "table"

    def __init__(self, poset: Poset, entries: dict[int, int]):
        super().__init__(poset)
        self._entries = entries

    def _compute(self, mask: int) -> int:
        try:
            return self._entries[mask]
        except KeyError:
            raise TableIncomplete(
                f"table has no entry for ideal "
                f"{{{', '.join(self.poset.names_of(mask))}}}"
            ) from None

    def params(self) -> dict:
        items = sorted(self._entries.items(), key=lambda kv: (kv[0].bit_count(), kv[0]))
        return {
            "entries": [
                {
                    "ideal": list(self.poset.names_of(m)),
                    "choice": list(self.poset.names_of(c)),
                }
                for m, c in items
            ]
        }

    def _param_key(self):
        return tuple(sorted(self._entries.items()))


class QuotaChoice(ChoiceFunction):
    """Keep the top-q elements of a strict priority list; discrete posets only."""

    family = "quota"

    def __init__(self, poset: Poset, priority: tuple[str, ...], quota: int):
        super().__init__(poset)
        self.priority = priority
        self.quota = quota
        self._priority_idx = tuple(poset.index(x) for x in priority)
        self._acc_mask = poset.mask_of(priority)

    def _compute(self, mask: int) -> int:
        avail = mask & self._acc_mask
        if avail.bit_count() <= self.quota:
            return avail
        out = 0
        left = self.quota
        for i in self._priority_idx:
            bit = 1 << i
            if avail & bit:
                out |= bit
                left -= 1
                if left == 0:
                    break
        return out

    def params(self) -> dict:
        return {"priority": list(self.priority), "quota": self.quota}

    def _param_key(self):
        return (self.priority, self.quota)


class AggregateChoice(ChoiceFunction):
    """Union of independent per-part choices over an order-disjoint partition."""

    family = "aggregate"

    def __init__(
        self,
        poset: Poset,
        parts: tuple[tuple[str, ...], ...],
        children: tuple[ChoiceFunction, ...],
    ):
        super().__init__(poset)
        self.parts = parts
        self.children = children
        self._part_idx = tuple(
            tuple(poset.index(x) for x in part) for part in parts
        )

    def _compute(self, mask: int) -> int:
        out = 0
        for idx, child in zip(self._part_idx, self.children):
            local = 0
            for li, gi in enumerate(idx):
                if (mask >> gi) & 1:
                    local |= 1 << li
            picked = child._choose_mask(local)
            for li, gi in enumerate(idx):
                if (picked >> li) & 1:
                    out |= 1 << gi
        return out

    def params(self) -> dict:
        return {
            "parts": [list(part) for part in self.parts],
            "children": [
                {"family": child.family, "params": child.params()}
                for child in self.children
            ],
        }

    def _param_key(self):
        return (self.parts, tuple(child._param_key() for child in self.children))


# ----------------------------------------------------------------------
# constructors

def make_quota(poset: Poset, priority: Sequence[str], quota: int) -> QuotaChoice:
    """Build a quota family; substitutable and consistent by construction.

    Quota selection is restricted to discrete posets because a top-q cut of
    an ordered menu need not be an ideal.  Small lattices are re-validated
    exhaustively on the spot.
    """
    if not poset.is_discrete:
        raise QuotaOnNontrivialPoset(
            "quota families are only defined on discrete posets"
        )
    seen = set()
    for name in priority:
        poset.index(name)
        if name in seen:
            raise DuplicateElement(f"priority lists {name!r} twice")
        seen.add(name)
    if quota < 0:
        raise ValueError("quota must be nonnegative")
    cf = QuotaChoice(poset, tuple(priority), int(quota))
    if (1 << poset.n) <= QUOTA_VALIDATION_CAP:
        report = cf.validate_plott()
        if not report.ok:
            raise InternalInvariant("quota family failed axiom validation")
    else:
        cf._mark(Validation.VERIFIED)
    return cf


def _as_mask(poset: Poset, value) -> int:
    if isinstance(value, System):
        if value.poset != poset:
            raise PosetMismatch("system belongs to a different poset")
        return value.mask
    return poset.mask_of(value)


def make_table(
    poset: Poset,
    entries: Iterable[tuple[Iterable[str] | System, Iterable[str] | System]],
    validate: bool = True,
    strict: bool = True,
    cap: int = DEFAULT_IDEAL_CAP,
) -> TableChoice:
    """Build an explicit table family from (ideal, choice) pairs.

    Requires one entry per ideal of the poset, each value a sub-ideal of its
    key.  By default the axioms are validated exhaustively and a failing
    table is rejected; with ``strict=False`` the table is kept and carries
    its failing report.
    """
    table: dict[int, int] = {}
    for key, value in entries:
        kmask = _as_mask(poset, key)
        if not poset._is_ideal_mask(kmask):
            raise NotAnIdeal(
                f"table key {{{', '.join(poset.names_of(kmask))}}} is not an ideal"
            )
        if kmask in table:
            raise DuplicateElement(
                f"table lists ideal {{{', '.join(poset.names_of(kmask))}}} twice"
            )
        vmask = _as_mask(poset, value)
        if vmask & ~kmask:
            raise ValueNotSubset(
                f"choice {{{', '.join(poset.names_of(vmask))}}} is not contained in "
                f"{{{', '.join(poset.names_of(kmask))}}}"
            )
        if not poset._is_ideal_mask(vmask):
            raise ValueNotIdeal(
                f"choice {{{', '.join(poset.names_of(vmask))}}} is not an ideal"
            )
        table[kmask] = vmask
    missing = [m for m in poset._all_ideal_masks(cap) if m not in table]
    if missing:
        raise TableIncomplete(
            f"table misses {len(missing)} ideal(s), first "
            f"{{{', '.join(poset.names_of(missing[0]))}}}"
        )
    cf = TableChoice(poset, table)
    if validate:
        report = cf.validate_plott(cap)
        if not report.ok and strict:
            raise PlottFailed(report)
    return cf


def make_aggregate(
    poset: Poset,
    parts: Sequence[Iterable[str]],
    children: Sequence[ChoiceFunction],
) -> AggregateChoice:
    """Glue one choice function per part of an order-disjoint partition.

    Each child must live on the sub-poset induced by its part.  The result
    chooses the union of the per-part choices; it inherits verified status
    when every child is verified, because the axioms are preserved under
    order-disjoint aggregation.
    """
    norm_parts = []
    seen: dict[str, int] = {}
    for pi, part in enumerate(parts):
        given = list(part)
        names = sorted(set(given), key=poset.index)
        if not names:
            raise NotAPartition("parts must be nonempty")
        if len(names) != len(given):
            raise NotAPartition(f"part {pi} repeats an element")
        for name in names:
            if name in seen:
                raise NotAPartition(f"element {name!r} appears in two parts")
            seen[name] = pi
        norm_parts.append(tuple(names))
    if len(seen) != poset.n:
        missing = [x for x in poset.elements if x not in seen]
        raise NotAPartition(f"elements not covered by any part: {missing}")
    for j in range(poset.n):
        for i in iter_bits(poset.down[j] & ~(1 << j)):
            a, b = poset.elements[i], poset.elements[j]
            if seen[a] != seen[b]:
                raise OrderCrossesParts(
                    f"{a!r} <= {b!r} crosses parts {seen[a]} and {seen[b]}"
                )
    if len(children) != len(norm_parts):
        raise NotAPartition(
            f"{len(norm_parts)} parts but {len(children)} choice functions"
        )
    for part, child in zip(norm_parts, children):
        expected = poset.restrict(part)
        if child.poset != expected:
            raise PosetMismatch(
                f"child for part {list(part)} is defined on a different poset"
            )
    cf = AggregateChoice(poset, tuple(norm_parts), tuple(children))
    if all(child.validation is Validation.VERIFIED for child in children):
        cf._mark(Validation.VERIFIED)
    return cf
