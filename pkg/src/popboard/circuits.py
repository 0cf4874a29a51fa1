"""Gating and memory circuit templates.

Four templates compose the whole board:

* ``SelectionGate`` — a four-population gate. Input flows from ``start`` to
  ``gate``, but ``inhib`` (driven by ``start`` itself) keeps the gate shut
  unless ``dis_inhib`` (driven by an external control signal) silences the
  inhibition. So throughput requires input AND permission simultaneously.
* ``WorkingMemory`` — two populations exciting each other; once pushed above
  the loop's unstable point the pair stays active without input (a latch),
  with an optional slow adaptation-driven decline.
* ``BindingGate`` — a selection gate whose throughput charges a working
  memory, which in turn holds the gate's permission line open: a one-shot
  latching switch (open it once with input+signal, it stays open).
* ``LinkedBindingGate`` — two binding gates in opposite directions sharing
  their memories, so committing either direction opens both (used wherever a
  path must later be traversed both ways).
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import AdaptLevels, CircuitWeights
from .dynamics import Network

__all__ = [
    "SelectionGate",
    "WorkingMemory",
    "BindingGate",
    "LinkedBindingGate",
    "build_selection_gate",
    "build_working_memory",
    "build_binding_gate",
    "build_linked_binding_gate",
]


@dataclass(frozen=True)
class SelectionGate:
    start: int
    gate: int
    inhib: int
    dis_inhib: int

    @property
    def populations(self) -> tuple[int, ...]:
        return (self.start, self.gate, self.inhib, self.dis_inhib)


@dataclass(frozen=True)
class WorkingMemory:
    pop_a: int
    pop_b: int

    @property
    def populations(self) -> tuple[int, ...]:
        return (self.pop_a, self.pop_b)


@dataclass(frozen=True)
class BindingGate:
    sel: SelectionGate
    wm: WorkingMemory

    @property
    def populations(self) -> tuple[int, ...]:
        return self.sel.populations + self.wm.populations


@dataclass(frozen=True)
class LinkedBindingGate:
    """Forward/backward gate pair with shared latching memories.

    ``wm_count`` is 2 when each direction has its own memory pair (both feed
    both permission lines) and 1 when a single shared memory serves both
    directions.
    """

    forward: SelectionGate
    backward: SelectionGate
    memories: tuple[WorkingMemory, ...]

    @property
    def wm_count(self) -> int:
        return len(self.memories)

    @property
    def populations(self) -> tuple[int, ...]:
        pops = self.forward.populations + self.backward.populations
        for wm in self.memories:
            pops += wm.populations
        return pops


def build_selection_gate(net: Network, w: CircuitWeights) -> SelectionGate:
    """Allocate and wire a selection gate; returns its handles."""
    base = net.add_populations(4)
    g = SelectionGate(start=base, gate=base + 1, inhib=base + 2, dis_inhib=base + 3)
    net.connect(g.start, g.gate, w.gate_drive)
    net.connect(g.start, g.inhib, w.gate_inhdrive)
    net.connect(g.inhib, g.gate, w.gate_block, inhibitory=True)
    net.connect(g.dis_inhib, g.inhib, w.gate_open, inhibitory=True)
    return g


def build_working_memory(net: Network, w: CircuitWeights,
                         adapt: float = 0.0) -> WorkingMemory:
    """Allocate and wire a two-population latch loop."""
    base = net.add_populations(2, adapt=adapt)
    wm = WorkingMemory(pop_a=base, pop_b=base + 1)
    net.connect(wm.pop_a, wm.pop_b, w.wm_mutual)
    net.connect(wm.pop_b, wm.pop_a, w.wm_mutual)
    return wm


def build_binding_gate(net: Network, w: CircuitWeights,
                       adapt_levels: AdaptLevels) -> BindingGate:
    """Selection gate + memory: throughput latches the gate open."""
    sel = build_selection_gate(net, w)
    wm = build_working_memory(net, w, adapt=adapt_levels.memory)
    net.connect(sel.gate, wm.pop_a, w.wm_latch)
    net.connect(wm.pop_a, sel.dis_inhib, w.wm_hold)
    return BindingGate(sel=sel, wm=wm)


def build_linked_binding_gate(net: Network, w: CircuitWeights,
                              adapt_levels: AdaptLevels,
                              wm_count: int = 2) -> LinkedBindingGate:
    """Two opposite-direction gates whose memories open both directions."""
    if wm_count not in (1, 2):
        raise ValueError("wm_count must be 1 or 2")
    forward = build_selection_gate(net, w)
    backward = build_selection_gate(net, w)
    memories = tuple(
        build_working_memory(net, w, adapt=adapt_levels.memory)
        for _ in range(wm_count)
    )
    net.connect(forward.gate, memories[0].pop_a, w.wm_latch)
    if wm_count == 2:
        net.connect(backward.gate, memories[1].pop_a, w.wm_latch)
    for wm in memories:
        net.connect(wm.pop_a, forward.dis_inhib, w.wm_hold)
        net.connect(wm.pop_a, backward.dis_inhib, w.wm_hold)
    return LinkedBindingGate(forward=forward, backward=backward, memories=memories)
