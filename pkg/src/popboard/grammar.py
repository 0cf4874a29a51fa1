"""Lexical types, structure slots, and the licensing table.

Ten lexical types classify tokens; eleven structure slots (SG1..SG10 plus
the displaced-dependent slot SG11-GAP) classify head/dependent relations.
The licensing table (``data/licensing.txt``) enumerates which (head type,
dependent type) pairs each slot accepts. Structural rules beyond the table:

* the sentence-root type ``S`` never appears as a dependent;
* each non-root node takes exactly one non-GAP head attachment, while GAP
  attachments are extra (a displaced node has both);
* head nodes may host any number of dependents across slots.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from enum import Enum
from functools import lru_cache
from importlib import resources

__all__ = [
    "LexicalType",
    "SLOTS",
    "GAP_SLOT",
    "GAP_HEADS",
    "Licensing",
    "load_licensing",
    "gap_interpretation",
    "validate_structure",
]


class LexicalType(str, Enum):
    """Lexical categories of tokens (and of virtual root nodes)."""

    ADJ = "Adj"
    ADV = "Adv"
    C = "C"     # subordinate-clause root
    CO = "Co"   # coordinator
    DET = "Det"
    N = "N"
    P = "P"
    PR = "Pr"   # pronoun
    S = "S"     # sentence root (virtual, never a dependent)
    V = "V"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: Structure-slot labels in canonical order.
SLOTS: tuple[str, ...] = (
    "SG1", "SG2", "SG3", "SG4", "SG5", "SG6",
    "SG7", "SG8", "SG9", "SG10", "SG11-GAP",
)
GAP_SLOT = "SG11-GAP"

#: Frozen table sizes; the loader refuses a table that disagrees.
_EXPECTED_TOTAL = 119
_EXPECTED_PER_SLOT = {
    "SG1": 4, "SG2": 12, "SG3": 3, "SG4": 3, "SG5": 22, "SG6": 17,
    "SG7": 13, "SG8": 7, "SG9": 13, "SG10": 15, GAP_SLOT: 10,
}


class Licensing:
    """The loaded licensing table with query helpers."""

    def __init__(self, triples: frozenset[tuple[LexicalType, LexicalType, str]]):
        self.triples = triples
        self._by_pair: dict[tuple[LexicalType, LexicalType], set[str]] = {}
        for head, dep, slot in triples:
            self._by_pair.setdefault((head, dep), set()).add(slot)

    def is_licensed(self, head: LexicalType, dep: LexicalType, slot: str) -> bool:
        """True iff ``slot`` accepts a ``dep``-type dependent of a ``head``."""
        if slot not in SLOTS:
            raise ValueError(f"unknown slot {slot!r}")
        if dep is LexicalType.S:
            return False
        return (head, dep, slot) in self.triples

    def licensed_slots(self, head: LexicalType, dep: LexicalType) -> set[str]:
        """All slots accepting the pair (empty set if none)."""
        if dep is LexicalType.S:
            return set()
        return set(self._by_pair.get((head, dep), ()))

    def slot_index(self, slot: str) -> int:
        return SLOTS.index(slot)

    def __len__(self) -> int:
        return len(self.triples)


@lru_cache(maxsize=1)
def load_licensing() -> Licensing:
    """Load and sanity-check the bundled licensing table."""
    text = resources.files("popboard").joinpath("data/licensing.txt").read_text()
    triples: set[tuple[LexicalType, LexicalType, str]] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"licensing.txt:{lineno}: expected 3 fields")
        head, dep, slot = parts
        try:
            entry = (LexicalType(head), LexicalType(dep), slot)
        except ValueError as exc:
            raise ValueError(f"licensing.txt:{lineno}: {exc}") from None
        if slot not in SLOTS:
            raise ValueError(f"licensing.txt:{lineno}: unknown slot {slot!r}")
        if entry in triples:
            raise ValueError(f"licensing.txt:{lineno}: duplicate triple")
        if entry[1] is LexicalType.S:
            raise ValueError(f"licensing.txt:{lineno}: root type as dependent")
        triples.add(entry)
    per_slot = {s: 0 for s in SLOTS}
    for _, _, slot in triples:
        per_slot[slot] += 1
    if len(triples) != _EXPECTED_TOTAL or per_slot != _EXPECTED_PER_SLOT:
        raise ValueError(
            f"licensing table drifted: {len(triples)} triples, {per_slot}"
        )
    return Licensing(frozenset(triples))


#: Head types that accept a displaced dependent, and what the displacement
#: means: a verb head hosts a fronted object, a clause root hosts a fronted
#: subject.
GAP_HEADS: dict[LexicalType, str] = {
    LexicalType.V: "object-gap",
    LexicalType.C: "subject-gap",
}


def gap_interpretation(head: LexicalType) -> str:
    """Role a displaced dependent plays under the given head type."""
    try:
        return GAP_HEADS[head]
    except KeyError:
        raise ValueError(
            f"{head.value} heads do not take displaced dependents"
        ) from None


def validate_structure(
    types: Sequence[LexicalType],
    edges: Iterable[tuple[int, int, str]],
    licensing: Licensing | None = None,
) -> list[str]:
    """Check an annotated dependency structure against the table.

    ``types[i]`` is node ``i``'s lexical type; ``edges`` holds
    ``(dep index, head index, slot)`` triples. Returns human-readable
    violations (empty list = valid):

    * edge endpoints out of range or self-attached;
    * a triple the licensing table does not accept (including the root
      type appearing as a dependent);
    * a node with more than one non-displaced head attachment (displaced
      attachments are extra: a displaced node carries both);
    * a displaced attachment under a head type outside ``GAP_HEADS``.
    """
    lic = licensing or load_licensing()
    out: list[str] = []
    non_gap_heads: dict[int, int] = {}
    for dep, head, slot in edges:
        tag = f"edge {dep}->{head} {slot}"
        if not (0 <= dep < len(types)) or not (0 <= head < len(types)):
            out.append(f"{tag}: node index out of range")
            continue
        if dep == head:
            out.append(f"{tag}: a node cannot attach to itself")
            continue
        if slot not in SLOTS:
            out.append(f"{tag}: unknown slot")
            continue
        if not lic.is_licensed(types[head], types[dep], slot):
            out.append(
                f"{tag}: {types[head].value} head does not license a "
                f"{types[dep].value} dependent in {slot}"
            )
        if slot == GAP_SLOT:
            if types[head] not in GAP_HEADS:
                out.append(
                    f"{tag}: {types[head].value} heads do not take "
                    "displaced dependents"
                )
        else:
            non_gap_heads[dep] = non_gap_heads.get(dep, 0) + 1
    for dep, count in sorted(non_gap_heads.items()):
        if count > 1:
            out.append(
                f"node {dep}: {count} non-displaced head attachments "
                "(at most one allowed)"
            )
    return out
