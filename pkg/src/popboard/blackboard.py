"""Board architecture: content rows, relation grid, and control surface.

Geometry for a board of size ``n``:

* ``n`` word pairs. Each pair owns one word population, one external input
  line, ten lexical assemblies (one per lexical type, shared by the pair's
  two rows), and ten word→lexical binding gates.
* ``2 n`` rows: every pair has a head-side row and a dependent-side row.
  A row holds, per lexical type, a select gate (opened by a side+type
  control signal), and per structure slot: a linked binding gate (the
  committed path between lexical flow and the slot), a slot assembly (a
  recency-bearing latch marking "this row has a pending/active slot"), a
  feed gate and relay into the relation grid, a retrieval gate out of it,
  and the competition bundle (rivalry, damper, guard, marker, blocker).
* ``n × n`` grid cells, one per (head row, dependent row). A cell is a
  linked binding gate with a single shared memory: committing it stores
  one directed attachment, and the latched cell later passes retrieval
  flow in both directions.
* 129 control-signal populations plus the ``n`` input lines form the
  external surface; a compiled schedule drives only these.

Population categories (``Category``) follow the circuit roles: gate quads
are GATING, latch loops are MEMORY, relay/competition/column populations
and word populations are OTHER, the control surface is EXTERNAL.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .config import Config
from .dynamics import Network
from .grammar import SLOTS, GAP_SLOT, LexicalType

__all__ = ["Category", "HEAD", "DEP", "Architecture", "build_architecture"]


class Category(IntEnum):
    GATING = 0
    MEMORY = 1
    OTHER = 2
    EXTERNAL = 3


HEAD, DEP = 0, 1
SIDES = ("H", "D")
N_TYPES = len(LexicalType)
N_SLOTS = len(SLOTS)
GAP = SLOTS.index(GAP_SLOT)

#: control-signal name templates
SIG_BIND = "bind:{t}"      # open word->lexical binding gates of one type
SIG_CLEAR = "clear:{t}"    # extinguish lexical assemblies of one type
SIG_HEAD = "head:{t}"      # open head-side select gates of one type
SIG_DEP = "dep:{t}"        # open dependent-side select gates of one type
SIG_LATCH = "latch:{s}:{g}"  # open a slot's linked gates on one side
SIG_FEED = "feed:{s}:{g}"    # open a slot's feed gates on one side
SIG_READ = "read:{s}:{g}"    # open a slot's retrieval gates on one side
SIG_WIPE = "wipe:{s}:{g}"    # extinguish a slot's assemblies on one side
SIG_MUTE = "mute-rivalry"    # silence the competition circuits globally


@dataclass
class Architecture:
    """Handles into a built board network (all arrays are population ids)."""

    n: int
    config: Config
    net: Network
    category: np.ndarray          # int8 per population
    signals: dict[str, int]
    line: np.ndarray              # [n] external input lines
    word: np.ndarray              # [n] word populations
    lex_a: np.ndarray             # [n, types] lexical assembly halves
    lex_b: np.ndarray
    wlg: dict[str, np.ndarray]    # word->lex gate blocks [n, types]
    lsel: dict[str, np.ndarray]   # select gates [2, n, types]
    slotg: dict[str, np.ndarray]  # linked slot gates [2, n, slots]
    sa_a: np.ndarray              # [2, n, slots]
    sa_b: np.ndarray
    gin: dict[str, np.ndarray]    # feed gates [2, n, slots]
    gout: dict[str, np.ndarray]   # retrieval gates [2, n, slots]
    relay: np.ndarray             # [2, n, slots]
    rival: np.ndarray
    damper: np.ndarray
    guard: np.ndarray
    marker: np.ndarray
    blocker: np.ndarray
    col_in: np.ndarray            # [2, n]
    col_out: np.ndarray           # [2, n]
    cell: dict[str, np.ndarray]   # cell blocks [n, n]

    def census(self) -> dict[str, int]:
        """Population counts per category plus the derived totals."""
        counts = np.bincount(self.category, minlength=4)
        gating, memory, other, external = (int(c) for c in counts)
        board = gating + memory + other
        total = board + external
        return {
            "gating": gating,
            "memory": memory,
            "other": other,
            "board_total": board,
            "external": external,
            "sim_total": total,
            "unit_total": 2 * total,
        }

    def cell_signature_indices(self, i: int, j: int) -> dict[str, int]:
        """Signature populations of grid cell (head row i, dependent row j)."""
        return {
            "memory": int(self.cell["wm_a"][i, j]),
            "start": int(self.cell["t_start"][i, j]),
            "dis_inhib": int(self.cell["t_dis"][i, j]),
            "inhib": int(self.cell["t_inhib"][i, j]),
            "gate": int(self.cell["t_gate"][i, j]),
        }

    def audit(self) -> list[str]:
        """Structural invariant checks; returns human-readable violations."""
        problems: list[str] = []
        counts = self.census()
        n = self.n
        expect = {
            "gating": 8 * n * n + 472 * n,
            "memory": 2 * n * n + 172 * n,
            "other": 137 * n,
            "external": n + 129,
        }
        for key, val in expect.items():
            if counts[key] != val:
                problems.append(f"census[{key}] = {counts[key]}, expected {val}")
        if len(self.signals) != 129:
            problems.append(f"signal count {len(self.signals)} != 129")
        # Inhibitory links must stay inside their whitelisted roles.
        ok_inh = self._inhibitory_whitelist()
        mat = self.net._w_inh.tocoo() if self.net.frozen else None
        if mat is None:
            problems.append("network not frozen; cannot audit links")
        else:
            role = self._role_map()
            for src, dst in zip(mat.col, mat.row):
                pair = (role[src], role[dst])
                if pair not in ok_inh:
                    problems.append(f"inhibitory link outside whitelist: {pair}")
                    break
        if GAP != N_SLOTS - 1:
            problems.append("displaced-dependent slot must be last")
        return problems

    def _role_map(self) -> np.ndarray:
        roles = np.zeros(self.net.n, dtype=np.int16)
        order = [
            ("gate_inhib", [self.wlg["inhib"], self.lsel["inhib"],
                            self.slotg["f_inhib"], self.slotg["b_inhib"],
                            self.gin["inhib"], self.gout["inhib"],
                            self.cell["t_inhib"], self.cell["b_inhib"]], 1),
            ("gate_dis", [self.wlg["dis"], self.lsel["dis"],
                          self.slotg["f_dis"], self.slotg["b_dis"],
                          self.gin["dis"], self.gout["dis"],
                          self.cell["t_dis"], self.cell["b_dis"]], 2),
            ("damper", [self.damper], 3),
            ("guard", [self.guard], 4),
            ("blocker", [self.blocker], 5),
            ("kill_sig", [np.array([v for k, v in self.signals.items()
                                    if k.startswith(("clear:", "wipe:"))])], 6),
            ("memory", [self.lex_a, self.lex_b, self.sa_a, self.sa_b,
                        self.wlg["wm_a"], self.wlg["wm_b"],
                        self.slotg["wm1_a"], self.slotg["wm1_b"],
                        self.slotg["wm2_a"], self.slotg["wm2_b"],
                        self.cell["wm_a"], self.cell["wm_b"]], 7),
            ("gate_gate", [self.wlg["gate"], self.lsel["gate"],
                           self.slotg["f_gate"], self.slotg["b_gate"],
                           self.gin["gate"], self.gout["gate"],
                           self.cell["t_gate"], self.cell["b_gate"]], 8),
            ("relay", [self.relay], 9),
            ("rival", [self.rival], 10),
            ("marker", [self.marker], 11),
            ("word", [self.word], 12),
        ]
        for _, blocks, code in order:
            for b in blocks:
                roles[np.asarray(b).ravel()] = code
        return roles

    def _inhibitory_whitelist(self) -> set[tuple[int, int]]:
        # (source role, target role) pairs inhibition may connect:
        # gate internals, damper onto relay, rival onto rival rows' rivalry
        # and own dampers, guard onto rivalry and markers, blocker/kill/
        # marker onto memories, kill pulses onto word populations.
        ok = {(1, 8), (2, 1), (3, 9), (4, 10), (4, 11), (5, 7), (6, 7),
              (6, 12), (10, 10), (10, 3), (11, 7)}
        if self.config.weights.damper_clear:
            ok.add((3, 7))
        return ok


def _ar(start: int, count: int) -> np.ndarray:
    return np.arange(start, start + count, dtype=np.int64)


class _Alloc:
    """Sequential block allocator that records category per population."""

    def __init__(self, net: Network):
        self.net = net
        self.cats: list[tuple[int, int, Category]] = []

    def block(self, count: int, cat: Category, shape: tuple[int, ...],
              adapt: float = 0.0) -> np.ndarray:
        start = self.net.add_populations(count, adapt=adapt)
        self.cats.append((start, count, cat))
        return _ar(start, count).reshape(shape)

    def category_array(self) -> np.ndarray:
        out = np.zeros(self.net.n, dtype=np.int8)
        for start, count, cat in self.cats:
            out[start:start + count] = int(cat)
        return out


def _wire_quad(net: Network, w, q: dict[str, np.ndarray], prefix: str) -> None:
    """Internal links of a block of selection gates (struct-of-arrays)."""
    s, g = q[f"{prefix}start"].ravel(), q[f"{prefix}gate"].ravel()
    i, d = q[f"{prefix}inhib"].ravel(), q[f"{prefix}dis"].ravel()
    net.connect(s, g, w.gate_drive)
    net.connect(s, i, w.gate_inhdrive)
    net.connect(i, g, w.gate_block, inhibitory=True)
    net.connect(d, i, w.gate_open, inhibitory=True)


def build_architecture(n: int, config: Config | None = None) -> Architecture:
    """Build a size-``n`` board (n word pairs, 2n rows, n² grid cells)."""
    if n < 2:
        raise ValueError("board size must be at least 2")
    from .config import load_config

    cfg = config or load_config()
    w = cfg.weights
    ad = cfg.adapt
    net = Network(cfg.pop)
    al = _Alloc(net)
    types = N_TYPES
    slots = N_SLOTS

    # ---- allocation (order fixed; categories recorded per block) ----------
    word = al.block(n, Category.OTHER, (n,))
    lex_a = al.block(n * types, Category.MEMORY, (n, types), adapt=ad.memory)
    lex_b = al.block(n * types, Category.MEMORY, (n, types), adapt=ad.memory)
    wlg = {}
    for part in ("start", "gate", "inhib", "dis"):
        wlg[part] = al.block(n * types, Category.GATING, (n, types))
    for part in ("wm_a", "wm_b"):
        wlg[part] = al.block(n * types, Category.MEMORY, (n, types),
                             adapt=ad.memory)
    lsel = {p: al.block(2 * n * types, Category.GATING, (2, n, types))
            for p in ("start", "gate", "inhib", "dis")}
    slotg = {}
    for part in ("f_start", "f_gate", "f_inhib", "f_dis",
                 "b_start", "b_gate", "b_inhib", "b_dis"):
        slotg[part] = al.block(2 * n * slots, Category.GATING, (2, n, slots))
    for part in ("wm1_a", "wm1_b", "wm2_a", "wm2_b"):
        slotg[part] = al.block(2 * n * slots, Category.MEMORY, (2, n, slots),
                               adapt=ad.memory)
    sa_a = al.block(2 * n * slots, Category.MEMORY, (2, n, slots),
                    adapt=ad.assembly)
    sa_b = al.block(2 * n * slots, Category.MEMORY, (2, n, slots),
                    adapt=ad.assembly)
    gin = {p: al.block(2 * n * slots, Category.GATING, (2, n, slots))
           for p in ("start", "gate", "inhib", "dis")}
    gout = {p: al.block(2 * n * slots, Category.GATING, (2, n, slots))
            for p in ("start", "gate", "inhib", "dis")}
    relay = al.block(2 * n * slots, Category.OTHER, (2, n, slots))
    rival = al.block(2 * n * slots, Category.OTHER, (2, n, slots))
    damper = al.block(2 * n * slots, Category.OTHER, (2, n, slots))
    guard = al.block(2 * n * slots, Category.OTHER, (2, n, slots))
    marker = al.block(2 * n * slots, Category.OTHER, (2, n, slots))
    blocker = al.block(2 * n * slots, Category.OTHER, (2, n, slots))
    col_in = al.block(2 * n, Category.OTHER, (2, n))
    col_out = al.block(2 * n, Category.OTHER, (2, n))
    cell = {}
    for part in ("t_start", "t_gate", "t_inhib", "t_dis",
                 "b_start", "b_gate", "b_inhib", "b_dis"):
        cell[part] = al.block(n * n, Category.GATING, (n, n))
    for part in ("wm_a", "wm_b"):
        cell[part] = al.block(n * n, Category.MEMORY, (n, n), adapt=ad.memory)
    line = al.block(n, Category.EXTERNAL, (n,))
    signals: dict[str, int] = {}

    def sig(name: str) -> int:
        idx = al.block(1, Category.EXTERNAL, (1,))[0]
        signals[name] = int(idx)
        return int(idx)

    for t in LexicalType:
        for tmpl in (SIG_BIND, SIG_CLEAR, SIG_HEAD, SIG_DEP):
            sig(tmpl.format(t=t.value))
    for s in SIDES:
        for g in SLOTS:
            for tmpl in (SIG_LATCH, SIG_FEED, SIG_READ, SIG_WIPE):
                sig(tmpl.format(s=s, g=g))
    sig(SIG_MUTE)

    # ---- wiring ------------------------------------------------------------
    net.connect(line, word, w.word_line)
    # word -> lexical binding gates (per type)
    net.connect(np.repeat(word, types), wlg["start"].ravel(), w.word_to_gate)
    _wire_quad(net, w, wlg, "")
    wlg_quad = wlg  # alias for clarity
    net.connect(wlg_quad["gate"].ravel(), wlg_quad["wm_a"].ravel(), w.wm_latch)
    net.connect(wlg_quad["wm_a"].ravel(), wlg_quad["wm_b"].ravel(), w.wm_mutual)
    net.connect(wlg_quad["wm_b"].ravel(), wlg_quad["wm_a"].ravel(), w.wm_mutual)
    net.connect(wlg_quad["wm_a"].ravel(), wlg_quad["dis"].ravel(), w.wm_hold)
    net.connect(wlg_quad["gate"].ravel(), lex_a.ravel(), w.gate_output)
    net.connect(lex_a.ravel(), lex_b.ravel(), w.wm_mutual)
    net.connect(lex_b.ravel(), lex_a.ravel(), w.wm_mutual)
    for ti, t in enumerate(LexicalType):
        b = signals[SIG_BIND.format(t=t.value)]
        c = signals[SIG_CLEAR.format(t=t.value)]
        net.connect(b, wlg_quad["dis"][:, ti], w.gate_signal)
        net.connect(c, lex_a[:, ti], w.kill_pulse, inhibitory=True)
        net.connect(c, lex_b[:, ti], w.kill_pulse, inhibitory=True)
        # releasing a word-type bond requires pressing the gate's internal
        # memory too, otherwise a still-driven word would simply re-open the
        # gate the moment the pulse ends
        net.connect(c, wlg_quad["wm_a"][:, ti], w.kill_pulse, inhibitory=True)
        net.connect(c, wlg_quad["wm_b"][:, ti], w.kill_pulse, inhibitory=True)
        # the same pulse also presses on every word population, so during a
        # typed inhibition sweep only words fed by more than one source stay
        # above the re-binding threshold
        net.connect(c, word, w.word_kill, inhibitory=True)
        net.connect(signals[SIG_HEAD.format(t=t.value)],
                    lsel["dis"][HEAD, :, ti], w.gate_signal)
        net.connect(signals[SIG_DEP.format(t=t.value)],
                    lsel["dis"][DEP, :, ti], w.gate_signal)
    # a select gate arms only on the conjunction of a latched lexical memory
    # and a currently active word: either alone stays below the gate
    # threshold, so dormant rows that share a lexical type with the word
    # being placed cannot join a creation or a retrieval hop
    for side in (HEAD, DEP):
        net.connect(lex_a.ravel(), lsel["start"][side].ravel(), w.lex_select_in)
        net.connect(np.repeat(word, types), lsel["start"][side].ravel(),
                    w.word_to_select)
    _wire_quad(net, w, lsel, "")
    # select gates fan out to every slot's forward gate in the same row
    net.connect(
        np.repeat(lsel["gate"].reshape(2 * n, types), slots, axis=1).ravel(),
        np.repeat(slotg["f_start"].reshape(2 * n, 1, slots), types, axis=1).ravel(),
        w.select_to_slot,
    )
    _wire_quad(net, w, slotg, "f_")
    _wire_quad(net, w, slotg, "b_")
    net.connect(slotg["f_gate"].ravel(), slotg["wm1_a"].ravel(), w.wm_latch)
    net.connect(slotg["b_gate"].ravel(), slotg["wm2_a"].ravel(), w.wm_latch)
    for pair in ("wm1", "wm2"):
        net.connect(slotg[f"{pair}_a"].ravel(), slotg[f"{pair}_b"].ravel(), w.wm_mutual)
        net.connect(slotg[f"{pair}_b"].ravel(), slotg[f"{pair}_a"].ravel(), w.wm_mutual)
        for d in ("f_dis", "b_dis"):
            net.connect(slotg[f"{pair}_a"].ravel(), slotg[d].ravel(), w.wm_hold)
    net.connect(slotg["f_gate"].ravel(), sa_a.ravel(), w.slot_to_assembly)
    net.connect(sa_a.ravel(), sa_b.ravel(), w.wm_mutual)
    net.connect(sa_b.ravel(), sa_a.ravel(), w.wm_mutual)
    net.connect(sa_a.ravel(), gin["start"].ravel(), w.assembly_readout)
    _wire_quad(net, w, gin, "")
    _wire_quad(net, w, gout, "")
    net.connect(gin["gate"].ravel(), relay.ravel(), w.feed_to_relay)
    net.connect(gin["start"].ravel(), relay.ravel(), w.readout_tap)
    net.connect(relay.ravel(),
                np.repeat(col_in.reshape(2, n, 1), slots, axis=2).ravel(),
                w.relay_to_column)
    net.connect(relay.ravel(), rival.ravel(), w.relay_to_compete)
    net.connect(slotg["f_gate"].ravel(), rival.ravel(), w.flow_to_compete)
    # rivalry race: rivals inhibit the same slot's rivals in every other
    # row on the same side and drive those rows' dampers; the winner
    # boosts its own relay (closing a positive loop) and shields its own
    # damper
    for side in (HEAD, DEP):
        for g in range(slots):
            riv = rival[side, :, g]
            dmp = damper[side, :, g]
            src = np.repeat(riv, n - 1)
            dst_riv = np.concatenate([np.delete(riv, k) for k in range(n)])
            dst_dmp = np.concatenate([np.delete(dmp, k) for k in range(n)])
            net.connect(src, dst_riv, w.compete_cross, inhibitory=True)
            net.connect(src, dst_dmp, w.damper_cross)
    net.connect(rival.ravel(), relay.ravel(), w.compete_boost)
    net.connect(rival.ravel(), damper.ravel(), w.compete_protect,
                inhibitory=True)
    net.connect(damper.ravel(), relay.ravel(), w.damper_block, inhibitory=True)
    if w.damper_clear:
        net.connect(damper.ravel(), sa_a.ravel(), w.damper_clear,
                    inhibitory=True)
        net.connect(damper.ravel(), sa_b.ravel(), w.damper_clear,
                    inhibitory=True)
    net.connect(relay.ravel(), damper.ravel(), w.relay_self)
    net.connect(signals[SIG_MUTE], guard.ravel(), w.guard_signal)
    net.connect(guard.ravel(), rival.ravel(), w.compete_mute, inhibitory=True)
    net.connect(guard.ravel(), marker.ravel(), w.mark_mute, inhibitory=True)
    net.connect(guard.ravel(), relay.ravel(), w.guard_boost)
    # completion marker: fires only on the coincidence of an active relay
    # and a column-out completion echo; clears its own slot assembly and
    # triggers the sibling-slot blocker
    net.connect(relay.ravel(), marker.ravel(), w.commit_mark)
    net.connect(np.repeat(col_out.reshape(2, n, 1), slots, axis=2).ravel(),
                marker.ravel(), w.relay_echo)
    net.connect(marker.ravel(), sa_a.ravel(), w.mark_clear, inhibitory=True)
    net.connect(marker.ravel(), sa_b.ravel(), w.mark_clear, inhibitory=True)
    net.connect(marker.ravel(), blocker.ravel(), w.mark_to_block)
    # commitment blocker: dependent side only, non-GAP slots, clears the
    # sibling non-GAP slots' assemblies and linked-gate memories
    mem_parts = (sa_a, sa_b, slotg["wm1_a"], slotg["wm1_b"],
                 slotg["wm2_a"], slotg["wm2_b"])
    for g in range(slots):
        if g == GAP:
            continue
        others = [g2 for g2 in range(slots) if g2 != g and g2 != GAP]
        for part in mem_parts:
            src = np.repeat(blocker[DEP, :, g], len(others))
            dst = part[DEP][:, others].ravel()
            net.connect(src, dst, w.block_clear, inhibitory=True)
    for s in SIDES:
        si = SIDES.index(s)
        for gi, g in enumerate(SLOTS):
            net.connect(signals[SIG_LATCH.format(s=s, g=g)],
                        slotg["f_dis"][si, :, gi], w.gate_signal)
            net.connect(signals[SIG_LATCH.format(s=s, g=g)],
                        slotg["b_dis"][si, :, gi], w.gate_signal)
            net.connect(signals[SIG_FEED.format(s=s, g=g)],
                        gin["dis"][si, :, gi], w.gate_signal)
            net.connect(signals[SIG_READ.format(s=s, g=g)],
                        gout["dis"][si, :, gi], w.gate_signal)
            net.connect(signals[SIG_WIPE.format(s=s, g=g)],
                        sa_a[si, :, gi], w.kill_pulse, inhibitory=True)
            net.connect(signals[SIG_WIPE.format(s=s, g=g)],
                        sa_b[si, :, gi], w.kill_pulse, inhibitory=True)
    # grid cells
    net.connect(np.repeat(col_in[HEAD], n), cell["t_start"].ravel(), w.column_in)
    net.connect(np.tile(col_in[DEP], n), cell["t_dis"].ravel(), w.column_open)
    net.connect(np.tile(col_in[DEP], n), cell["b_start"].ravel(), w.column_in)
    _wire_quad(net, w, cell, "t_")
    _wire_quad(net, w, cell, "b_")
    net.connect(cell["t_gate"].ravel(), cell["wm_a"].ravel(), w.wm_latch)
    net.connect(cell["wm_a"].ravel(), cell["wm_b"].ravel(), w.wm_mutual)
    net.connect(cell["wm_b"].ravel(), cell["wm_a"].ravel(), w.wm_mutual)
    net.connect(cell["wm_a"].ravel(), cell["t_dis"].ravel(), w.wm_hold)
    net.connect(cell["wm_a"].ravel(), cell["b_dis"].ravel(), w.wm_hold)
    # either traversal direction reports completion on both rows' outputs
    net.connect(cell["t_gate"].ravel(), np.tile(col_out[DEP], n), w.cell_out)
    net.connect(cell["t_gate"].ravel(), np.repeat(col_out[HEAD], n), w.cell_out)
    net.connect(cell["b_gate"].ravel(), np.repeat(col_out[HEAD], n), w.cell_out)
    net.connect(cell["b_gate"].ravel(), np.tile(col_out[DEP], n), w.cell_out)
    # column out feeds the retrieval gates of its own row
    net.connect(np.repeat(col_out.reshape(2, n, 1), slots, axis=2).ravel(),
                gout["start"].ravel(), w.out_select_in)
    net.connect(gout["gate"].ravel(), slotg["b_start"].ravel(), w.retrieve_to_slot)
    net.connect(slotg["b_gate"].ravel(),
                np.broadcast_to(word[None, :, None], (2, n, slots)).ravel(),
                w.slot_to_word)
    # a readout through the backward slot gate also re-lights that slot's
    # assembly, so a retrieved row can carry the flow onward even when its
    # word has no external line (e.g. clause-root rows)
    net.connect(slotg["b_gate"].ravel(), sa_a.ravel(), w.retro_assembly)

    net.freeze()
    return Architecture(
        n=n, config=cfg, net=net, category=al.category_array(),
        signals=signals, line=line, word=word, lex_a=lex_a, lex_b=lex_b,
        wlg=wlg, lsel=lsel, slotg=slotg, sa_a=sa_a, sa_b=sa_b, gin=gin,
        gout=gout, relay=relay, rival=rival, damper=damper, guard=guard,
        marker=marker, blocker=blocker, col_in=col_in, col_out=col_out,
        cell=cell,
    )
