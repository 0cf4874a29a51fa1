"""Control-signal scheduling and structure encoding.

The only inputs a board accepts at run time are its external populations:
the per-pair input lines and the 129 control signals. A schedule is a list
of :class:`Pulse` objects — constant drive applied to one external
population over a half-open time interval. :func:`run_pulses` plays a
schedule against a frozen board and records selected traces.

Higher layers build schedules: the operation channel serializes per-word
control operations (lexical clear/bind, slot-assembly creation, commits)
through a single queue, and the query planner chains retrieval hops.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .blackboard import DEP, Architecture, Category, build_architecture
from .config import Config, load_config
from .grammar import GAP_SLOT, SLOTS, LexicalType, validate_structure
from .metrics import ActivityTrace

__all__ = [
    "Pulse", "resolve_target", "run_pulses", "TraceSet",
    "StructureError", "CapacityError", "Node", "Edge", "StructureSpec",
    "parse_structure", "load_structure",
    "ScenarioSpec", "parse_scenarios", "load_scenarios",
    "corpus_dir", "list_corpus", "load_corpus_structure",
    "load_bundled_scenarios",
    "CompiledSchedule", "compile_schedule",
    "BindingEvent", "BindingLog", "run_schedule", "extract_bindings",
    "latched_cells", "binding_state", "row_labels",
    "RoundTrip", "verify_round_trip",
    "StoreRecord", "store_sentences",
    "QuestionSpec", "parse_question", "QueryResult", "run_question",
    "answer_question",
    "ScenarioReport", "scenario_run", "run_scenario", "SCENARIO_NAMES",
    "ControlEvent", "ControlSchedule",
]


@dataclass(frozen=True)
class Pulse:
    """Constant external drive on one target over [t0, t1) milliseconds."""

    target: str
    t0: float
    t1: float
    level: float = 100.0

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ValueError(f"empty pulse window on {self.target!r}")


def resolve_target(arch: Architecture, name: str) -> int:
    """Map a pulse target name to its population index.

    ``line:<k>`` addresses pair ``k``'s input line; any other name must be
    a control-signal name from ``arch.signals``.
    """
    if name.startswith("line:"):
        k = int(name.split(":", 1)[1])
        if not 0 <= k < arch.n:
            raise KeyError(f"input line {k} out of range for n={arch.n}")
        return int(arch.line[k])
    try:
        return arch.signals[name]
    except KeyError:
        raise KeyError(f"unknown control signal {name!r}") from None


@dataclass
class TraceSet:
    """Per-step excitatory-rate traces for a named set of populations."""

    times: np.ndarray                 # [steps]
    traces: dict[str, np.ndarray]     # name -> [steps]

    def value_at(self, name: str, t_ms: float) -> float:
        idx = int(np.searchsorted(self.times, t_ms, side="right")) - 1
        return float(self.traces[name][max(idx, 0)])

    def window_max(self, name: str, t0: float, t1: float) -> float:
        sel = (self.times >= t0) & (self.times < t1)
        vals = self.traces[name][sel]
        return float(vals.max()) if vals.size else 0.0

    def first_crossing(self, name: str, level: float,
                       after: float = 0.0) -> float | None:
        tr = self.traces[name]
        sel = (self.times >= after) & (tr >= level)
        hits = np.flatnonzero(sel)
        return float(self.times[hits[0]]) if hits.size else None


def run_pulses(arch: Architecture, pulses: list[Pulse], duration_ms: float,
               record: dict[str, int] | None = None,
               reset: bool = True) -> TraceSet:
    """Play a pulse schedule on the board, recording selected populations.

    ``record`` maps trace names to population indices. The board is reset
    to rest first unless ``reset`` is false (allowing phased runs).
    """
    net = arch.net
    if reset:
        net.reset_state()
    record = record or {}
    idx = np.fromiter(record.values(), dtype=np.int64, count=len(record))
    compiled = [(resolve_target(arch, p.target), p.t0, p.t1, p.level)
                for p in pulses]
    steps = int(round(duration_ms / net.params.dt_ms))
    times = np.empty(steps)
    rows = np.empty((steps, len(record)))
    ext = np.zeros(net.n)
    t_offset = net.t_ms
    for s in range(steps):
        t = t_offset + s * net.params.dt_ms
        ext[:] = 0.0
        for pop, t0, t1, level in compiled:
            if t0 <= t - t_offset < t1:
                ext[pop] += level
        net.step(ext)
        times[s] = net.t_ms
        if len(record):
            rows[s] = net.e[idx]
    return TraceSet(times=times,
                    traces={k: rows[:, i] for i, k in enumerate(record)})


# --------------------------------------------------------------------------
# dependency structures
# --------------------------------------------------------------------------

class StructureError(ValueError):
    """A structure or scenario description is malformed or unlicensed."""


class CapacityError(ValueError):
    """A plan does not fit the board or its input windows."""


@dataclass(frozen=True)
class Node:
    """One input word. ``token`` is None for covert (unspoken) nodes."""

    index: int
    token: str | None
    lex: LexicalType


@dataclass(frozen=True)
class Edge:
    """Directed attachment: ``dep`` fills ``slot`` of ``head``."""

    dep: int
    head: int
    slot: str


@dataclass(frozen=True)
class StructureSpec:
    """A validated dependency analysis of one sentence."""

    name: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if not self.nodes:
            raise StructureError(f"{self.name}: structure needs at least one node")
        if len(set(self.edges)) != len(self.edges):
            raise StructureError(f"{self.name}: duplicate edge")
        problems = validate_structure(
            [nd.lex for nd in self.nodes],
            [(e.dep, e.head, e.slot) for e in self.edges])
        if problems:
            raise StructureError(f"{self.name}: " + "; ".join(problems))

    @property
    def sentence(self) -> str:
        return " ".join(nd.token for nd in self.nodes if nd.token)

    @property
    def edge_triples(self) -> frozenset[tuple[int, int, str]]:
        return frozenset((e.dep, e.head, e.slot) for e in self.edges)


def parse_structure(text: str, name: str = "<string>") -> StructureSpec:
    """Parse a structure description.

    Format (one directive per line, ``#`` comments)::

        node <index> <token|_> <Type>
        edge <dep-index> <head-index> <slot>
    """
    nodes: list[Node] = []
    edges: list[Edge] = []
    seen: set[Edge] = set()
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        where = f"{name}:{ln}"
        if parts[0] == "node":
            if len(parts) != 4:
                raise StructureError(f"{where}: expected 'node <index> <token|_> <Type>'")
            try:
                idx = int(parts[1])
            except ValueError:
                raise StructureError(f"{where}: node index must be an integer") from None
            if idx != len(nodes):
                raise StructureError(
                    f"{where}: node indices must be sequential from 0 "
                    f"(got {idx}, expected {len(nodes)})")
            try:
                lex = LexicalType(parts[3])
            except ValueError:
                raise StructureError(f"{where}: unknown lexical type '{parts[3]}'") from None
            token = None if parts[2] == "_" else parts[2]
            nodes.append(Node(idx, token, lex))
        elif parts[0] == "edge":
            if len(parts) != 4:
                raise StructureError(f"{where}: expected 'edge <dep> <head> <slot>'")
            try:
                dep, head = int(parts[1]), int(parts[2])
            except ValueError:
                raise StructureError(f"{where}: edge endpoints must be integers") from None
            if parts[3] not in SLOTS:
                raise StructureError(f"{where}: unknown slot '{parts[3]}'")
            if not (0 <= dep < len(nodes) and 0 <= head < len(nodes)):
                raise StructureError(f"{where}: edge endpoint out of range "
                                     f"(nodes declared so far: {len(nodes)})")
            e = Edge(dep, head, parts[3])
            if e in seen:
                raise StructureError(f"{where}: duplicate edge {dep}->{head} {parts[3]}")
            seen.add(e)
            edges.append(e)
        else:
            raise StructureError(f"{where}: unknown directive '{parts[0]}'")
    if not nodes:
        raise StructureError(f"{name}: no nodes declared")
    return StructureSpec(name=name, nodes=tuple(nodes), edges=tuple(edges))


def load_structure(path: str | Path) -> StructureSpec:
    p = Path(path)
    return parse_structure(p.read_text(), name=p.stem)


# --------------------------------------------------------------------------
# scenario descriptions (parsing-process variations on a structure)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    """A named parsing run: a structure plus incremental-commitment directives.

    ``anticipations`` arm one side of an attachment early, ``defers`` move an
    attachment's commitment to a later word, ``lates`` move both of a
    dependent's operations to a later word, ``extras`` add attachments the
    final analysis does not contain, ``drops`` remove structure attachments
    from the plan, and ``expect_absent`` lists attachments that must NOT be
    realized for the scenario to count as reproduced.
    """

    name: str
    structure: str
    policy: str = "delayed"
    word_ms: float | None = None
    anticipations: tuple[tuple[str, int, str, int], ...] = ()
    extras: tuple[tuple[Edge, int], ...] = ()
    drops: tuple[Edge, ...] = ()
    defers: tuple[tuple[Edge, int], ...] = ()
    lates: tuple[tuple[Edge, int], ...] = ()
    expect_absent: tuple[Edge, ...] = ()


def _parse_edge_words(parts: list[str], where: str) -> Edge:
    try:
        dep, head = int(parts[0]), int(parts[1])
    except ValueError:
        raise StructureError(f"{where}: edge endpoints must be integers") from None
    if parts[2] not in SLOTS:
        raise StructureError(f"{where}: unknown slot '{parts[2]}'")
    return Edge(dep, head, parts[2])


def _parse_at(parts: list[str], where: str) -> int:
    if len(parts) < 2 or parts[-2] != "at":
        raise StructureError(f"{where}: expected '... at <node>'")
    try:
        return int(parts[-1])
    except ValueError:
        raise StructureError(f"{where}: 'at' needs an integer node index") from None


def parse_scenarios(text: str, name: str = "<string>") -> dict[str, ScenarioSpec]:
    """Parse scenario blocks: ``scenario <name>`` ... ``end``."""
    out: dict[str, ScenarioSpec] = {}
    cur: dict | None = None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        where = f"{name}:{ln}"
        if parts[0] == "scenario":
            if cur is not None:
                raise StructureError(f"{where}: previous scenario not closed with 'end'")
            if len(parts) != 2:
                raise StructureError(f"{where}: expected 'scenario <name>'")
            if parts[1] in out:
                raise StructureError(f"{where}: duplicate scenario '{parts[1]}'")
            cur = dict(name=parts[1], structure=None, policy="delayed", word_ms=None,
                       anticipations=[], extras=[], drops=[], defers=[], lates=[],
                       expect_absent=[])
            continue
        if cur is None:
            raise StructureError(f"{where}: directive outside a scenario block")
        if parts[0] == "end":
            if cur["structure"] is None:
                raise StructureError(f"{where}: scenario '{cur['name']}' names no structure")
            out[cur["name"]] = ScenarioSpec(
                name=cur["name"], structure=cur["structure"], policy=cur["policy"],
                word_ms=cur["word_ms"],
                anticipations=tuple(cur["anticipations"]),
                extras=tuple(cur["extras"]), drops=tuple(cur["drops"]),
                defers=tuple(cur["defers"]), lates=tuple(cur["lates"]),
                expect_absent=tuple(cur["expect_absent"]))
            cur = None
        elif parts[0] == "structure" and len(parts) == 2:
            cur["structure"] = parts[1]
        elif parts[0] == "policy" and len(parts) == 2:
            if parts[1] not in ("eager", "delayed"):
                raise StructureError(f"{where}: policy must be 'eager' or 'delayed'")
            cur["policy"] = parts[1]
        elif parts[0] == "word-ms" and len(parts) == 2:
            cur["word_ms"] = float(parts[1])
        elif parts[0] == "extra" and len(parts) == 6:
            cur["extras"].append((_parse_edge_words(parts[1:4], where),
                                  _parse_at(parts, where)))
        elif parts[0] == "drop" and len(parts) == 4:
            cur["drops"].append(_parse_edge_words(parts[1:4], where))
        elif parts[0] == "defer" and len(parts) == 6:
            cur["defers"].append((_parse_edge_words(parts[1:4], where),
                                  _parse_at(parts, where)))
        elif parts[0] == "late" and len(parts) == 6:
            cur["lates"].append((_parse_edge_words(parts[1:4], where),
                                 _parse_at(parts, where)))
        elif parts[0] == "anticipate" and len(parts) == 6:
            side = {"head": "H", "dep": "D"}.get(parts[1])
            if side is None:
                raise StructureError(f"{where}: anticipate needs 'head' or 'dep'")
            try:
                node = int(parts[2])
            except ValueError:
                raise StructureError(f"{where}: anticipate needs a node index") from None
            if parts[3] not in SLOTS:
                raise StructureError(f"{where}: unknown slot '{parts[3]}'")
            cur["anticipations"].append((side, node, parts[3], _parse_at(parts, where)))
        elif parts[0] == "expect-absent" and len(parts) == 4:
            cur["expect_absent"].append(_parse_edge_words(parts[1:4], where))
        else:
            raise StructureError(f"{where}: unrecognized directive '{line}'")
    if cur is not None:
        raise StructureError(f"{name}: scenario '{cur['name']}' not closed with 'end'")
    return out


def load_scenarios(path: str | Path) -> dict[str, ScenarioSpec]:
    p = Path(path)
    return parse_scenarios(p.read_text(), name=p.stem)


def corpus_dir() -> Path:
    return Path(str(resources.files("popboard"))) / "data" / "corpus"


def list_corpus(directory: str | Path | None = None) -> list[str]:
    d = Path(directory) if directory is not None else corpus_dir()
    return sorted(p.stem for p in d.glob("*.txt"))


def load_corpus_structure(name: str,
                          directory: str | Path | None = None) -> StructureSpec:
    d = Path(directory) if directory is not None else corpus_dir()
    p = d / f"{name}.txt"
    if not p.is_file():
        raise KeyError(f"no bundled structure '{name}'; available: "
                       + ", ".join(list_corpus(d)))
    return load_structure(p)


def load_bundled_scenarios() -> dict[str, ScenarioSpec]:
    p = Path(str(resources.files("popboard"))) / "data" / "scenarios.txt"
    return load_scenarios(p)


# --------------------------------------------------------------------------
# schedule compilation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CompiledSchedule:
    """A fully timed control plan for one sentence.

    ``feeds`` holds ``(t0, t1, slot, head_node, dep_node)`` for each
    attachment-commitment window; ``ops`` is a human-readable op log.
    """

    structure: StructureSpec
    policy: str
    base_row: int
    word_ms: float
    pulses: tuple[Pulse, ...]
    duration_ms: float
    onsets: tuple[float, ...]
    word_markers: tuple[tuple[float, int, str], ...]
    feeds: tuple[tuple[float, float, str, int, int], ...]
    ops: tuple[str, ...]
    last_op_end: float
    row_token: dict[int, str | None]
    row_type: dict[int, LexicalType]
    late_marks: tuple[int, ...] = ()

    def dump(self) -> str:
        """Render the plan as ``t_ms signal level duration`` lines."""
        rows = sorted(self.pulses, key=lambda p: (p.t0, p.target))
        return "\n".join(f"{p.t0:.1f} {p.target} {p.level:g} {p.t1 - p.t0:.1f}"
                         for p in rows)


def _slot_rank(slot: str) -> int:
    if slot == "SG9":
        return 0
    if slot == GAP_SLOT:
        return 2
    return 1


def _subtract(segs: list[tuple[float, float]], a: float,
              b: float) -> list[tuple[float, float]]:
    out = []
    for x, y in segs:
        if b <= x or a >= y:
            out.append((x, y))
            continue
        if a > x:
            out.append((x, a))
        if b < y:
            out.append((b, y))
    return out


def compile_schedule(structure: StructureSpec, config: Config, *,
                     policy: str = "delayed", base_row: int = 0,
                     n: int | None = None, word_ms: float | None = None,
                     pauses: dict[int, float] | None = None,
                     scenario: ScenarioSpec | None = None) -> CompiledSchedule:
    """Compile a structure (optionally under a scenario) into a control plan.

    Words are presented one at a time. A shared signal channel carries, in
    order per input window: the word's type marker, then any one-sided
    assembly creations due at that window (each one re-drives its target row
    so the selection conjunction sees an active word). A separate commitment
    lane serializes the attachment feeds. The function refuses plans whose
    channel backlog would push a type marker past its word's input window,
    and plans that would drive two different rows at once.
    """
    if policy not in ("eager", "delayed"):
        raise ValueError(f"unknown policy '{policy}'")
    t = config.timing
    if scenario is not None:
        policy = scenario.policy
        if word_ms is None:
            word_ms = scenario.word_ms
    word_ms = float(word_ms if word_ms is not None else t.word_ms)
    if word_ms < 100.0:
        raise ValueError("word_ms must be at least 100 ms")
    nodes = structure.nodes
    count = len(nodes)
    if n is not None and base_row + count > n:
        raise CapacityError(
            f"sentence '{structure.name}' needs rows {base_row}.."
            f"{base_row + count - 1} but the board has {n} rows")
    lex = [nd.lex for nd in nodes]
    pauses = {int(k): float(v) for k, v in (pauses or {}).items()}

    onsets: list[float] = []
    cur = 0.0
    for k in range(count):
        onsets.append(cur)
        cur += word_ms + pauses.get(k, 0.0)
    tail_onset = cur

    def w_onset(w: int) -> float:
        return onsets[w] if w < count else tail_onset

    # --- scenario directives -> per-edge plan ------------------------------
    drops: set[Edge] = set()
    defers: dict[Edge, int] = {}
    lates: dict[Edge, int] = {}
    extras: list[tuple[Edge, int]] = []
    anticipations: list[tuple[str, int, str, int]] = []
    if scenario is not None:
        structure_edges = set(structure.edges)
        for e in scenario.drops:
            if e not in structure_edges:
                raise StructureError(f"scenario {scenario.name}: drop names "
                                     f"unknown edge {e.dep}->{e.head} {e.slot}")
            drops.add(e)
        for e, at in scenario.defers:
            if e not in structure_edges:
                raise StructureError(f"scenario {scenario.name}: defer names "
                                     f"unknown edge {e.dep}->{e.head} {e.slot}")
            defers[e] = at
        for e, at in scenario.lates:
            if e not in structure_edges:
                raise StructureError(f"scenario {scenario.name}: late names "
                                     f"unknown edge {e.dep}->{e.head} {e.slot}")
            lates[e] = at
        from .grammar import load_licensing
        lic = load_licensing()
        for e, at in scenario.extras:
            if not (0 <= e.dep < count and 0 <= e.head < count):
                raise StructureError(f"scenario {scenario.name}: extra edge "
                                     f"endpoint out of range")
            if not lic.is_licensed(lex[e.head], lex[e.dep], e.slot):
                raise StructureError(
                    f"scenario {scenario.name}: extra edge {e.dep}->{e.head} "
                    f"{e.slot} is not licensed")
            extras.append((e, at))
        for side, node, slot, at in scenario.anticipations:
            if not 0 <= node < count:
                raise StructureError(f"scenario {scenario.name}: anticipation "
                                     f"node {node} out of range")
            anticipations.append((side, node, slot, at))
        known = {(e.dep, e.head, e.slot) for e in structure.edges}
        known |= {(e.dep, e.head, e.slot) for e, _ in extras}
        for e in scenario.expect_absent:
            if (e.dep, e.head, e.slot) not in known:
                raise StructureError(f"scenario {scenario.name}: expect-absent "
                                     f"names unknown edge {e.dep}->{e.head} {e.slot}")

    edges = [e for e in structure.edges if e not in drops]
    plan: list[tuple[Edge, int, int]] = []   # edge, trigger window, seq
    for seq, e in enumerate(edges):
        later = max(e.dep, e.head)
        trig = later if policy == "eager" else later + 1
        if e in defers:
            trig = defers[e]
        if e in lates:
            trig = lates[e]
        plan.append((e, min(trig, count), seq))
    for x, (e, at) in enumerate(extras):
        plan.append((e, min(at, count), len(edges) + x))

    # --- shared signal channel: binds, then creations, per window ----------
    # Both of an edge's assemblies are created in its trigger window, right
    # before its feed, so same-slot assemblies of later edges are not yet
    # armed when earlier feeds run.  Anticipations inject earlier creations
    # explicitly; the edge's own creation then de-duplicates onto them.
    creates: list[tuple[int, tuple, str, int, str, str]] = []
    for i, (side, node, slot, at) in enumerate(anticipations):
        creates.append((min(at, count), (_slot_rank(slot), 0, i, 0),
                        side, node, slot, "anticipated"))
    for e, trig, seq in plan:
        origin = f"for {e.dep}->{e.head} {e.slot}"
        creates.append((trig, (_slot_rank(e.slot), 1, seq, 0),
                        "D", e.dep, e.slot, origin))
        creates.append((trig, (_slot_rank(e.slot), 1, seq, 1),
                        "H", e.head, e.slot, origin))
    creates.sort(key=lambda c: (c[0], c[1]))

    pulses: list[Pulse] = []
    ops: list[str] = []
    late_marks: list[int] = []
    create_line: list[tuple[int, float, float]] = []
    create_end: dict[tuple[str, int, str], float] = {}
    channel_free = -1e9
    ci = 0
    for w in range(count + 1):
        o = w_onset(w)
        if w < count:
            # The word's line may start late when the previous window's ops
            # spilled past this onset; the type marker must trail the line's
            # true start so the word has ramped up when the marker arrives.
            b0 = max(o, channel_free) + t.bind_lead
            b1 = b0 + t.bind_len
            if b1 > o + word_ms:
                late_marks.append(w)
                ops.append(f"{b0:7.0f}  w{w:<2d} mark type {lex[w].value} "
                           f"(overflow: ends past window at {o + word_ms:.0f})")
            else:
                ops.append(f"{b0:7.0f}  w{w:<2d} mark type {lex[w].value}")
            pulses.append(Pulse(f"bind:{lex[w].value}", b0, b1, t.signal_level))
            channel_free = b1
        while ci < len(creates) and creates[ci][0] == w:
            _, _, side, node, slot, origin = creates[ci]
            ci += 1
            key = (side, node, slot)
            if key in create_end:
                ops.append(f"{'':7s}  w{w:<2d} reuse {side}:{slot} node {node} ({origin})")
                continue
            c0 = max(channel_free + t.op_gap, o + t.bind_lead)
            s0 = c0 + t.create_lead
            c1 = s0 + t.create_len
            pulses.append(Pulse(f"line:{base_row + node}", c0, c1, t.drive_level))
            create_line.append((node, c0, c1))
            sel = "head" if side == "H" else "dep"
            pulses.append(Pulse(f"{sel}:{lex[node].value}", s0, c1, t.signal_level))
            pulses.append(Pulse(f"latch:{side}:{slot}", s0, c1, t.signal_level))
            create_end[key] = c1
            channel_free = c1
            ops.append(f"{c0:7.0f}  w{w:<2d} create {side}:{slot} node {node} ({origin})")

    # --- commitment lane: serialized attachment feeds ----------------------
    feed_plan = sorted(plan, key=lambda p: (p[1], _slot_rank(p[0].slot), p[2]))
    lane_free = 0.0
    feeds: list[tuple[float, float, str, int, int]] = []
    for e, trig, seq in feed_plan:
        ready = max(w_onset(trig),
                    create_end[("D", e.dep, e.slot)],
                    create_end[("H", e.head, e.slot)])
        f0 = max(lane_free, ready) + t.op_gap
        f1 = f0 + t.commit_len
        pulses.append(Pulse(f"feed:H:{e.slot}", f0, f1, t.signal_level))
        pulses.append(Pulse(f"feed:D:{e.slot}", f0, f1, t.signal_level))
        feeds.append((f0, f1, e.slot, e.head, e.dep))
        lane_free = f1
        ops.append(f"{f0:7.0f}  t{trig:<2d} commit {e.slot} head {e.head} dep {e.dep}")

    # --- word presentations, minus moments another row is being re-driven --
    word_markers: list[tuple[float, int, str]] = []
    for k, nd in enumerate(nodes):
        segs = [(onsets[k], onsets[k] + word_ms)]
        for node, c0, c1 in create_line:
            if node != k:
                segs = _subtract(segs, c0, c1)
        for a, b in segs:
            if b - a >= 1.0:
                pulses.append(Pulse(f"line:{base_row + k}", a, b, t.drive_level))
        if nd.token is not None:
            word_markers.append((onsets[k], k, nd.token))

    lines = [(int(p.target[5:]), p.t0, p.t1)
             for p in pulses if p.target.startswith("line:")]
    for i in range(len(lines)):
        ri, a0, a1 = lines[i]
        for j in range(i + 1, len(lines)):
            rj, b0, b1 = lines[j]
            if ri != rj and a0 < b1 and b0 < a1:
                raise CapacityError(
                    f"'{structure.name}': plan would drive rows {ri} and {rj} "
                    f"at once near {max(a0, b0):.0f} ms")

    # --- per-sentence hygiene ----------------------------------------------
    last_op_end = max(p.t1 for p in pulses)
    h = last_op_end + t.hygiene_delay_ms
    for side in ("H", "D"):
        for g in SLOTS:
            pulses.append(Pulse(f"wipe:{side}:{g}", h, h + t.wipe_len,
                                t.signal_level))
    for lt in LexicalType:
        pulses.append(Pulse(f"clear:{lt.value}", h, h + t.clear_len,
                            t.signal_level))
    ops.append(f"{h:7.0f}  --  hygiene (wipe one-sided assemblies, clear words)")

    return CompiledSchedule(
        structure=structure, policy=policy, base_row=base_row, word_ms=word_ms,
        pulses=tuple(pulses), duration_ms=last_op_end + t.tail_ms,
        onsets=tuple(onsets), word_markers=tuple(word_markers),
        feeds=tuple(feeds), ops=tuple(ops), last_op_end=last_op_end,
        row_token={base_row + k: nd.token for k, nd in enumerate(nodes)},
        row_type={base_row + k: nd.lex for k, nd in enumerate(nodes)},
        late_marks=tuple(late_marks))


# --------------------------------------------------------------------------
# schedule execution with a binding log
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BindingEvent:
    """One pair-cell latch: head row's ``slot`` was filled by the dep row."""

    t_ms: float
    head_row: int
    dep_row: int
    slot: str
    head_type: LexicalType | None = None
    dep_type: LexicalType | None = None


@dataclass(frozen=True)
class BindingLog:
    """All pair-cell latch events observed during one run."""

    events: tuple[BindingEvent, ...] = ()

    def render(self, labels: dict[int, str] | None = None) -> str:
        labels = labels or {}
        out = []
        for ev in self.events:
            d = labels.get(ev.dep_row, f"row{ev.dep_row}")
            hd = labels.get(ev.head_row, f"row{ev.head_row}")
            out.append(f"{ev.t_ms:8.1f} ms  {d} -> {hd}  {ev.slot}")
        return "\n".join(out)


def extract_bindings(log: BindingLog) -> frozenset[tuple[int, int, str]]:
    """The realized attachment set as ``(dep_row, head_row, slot)`` triples."""
    return frozenset((ev.dep_row, ev.head_row, ev.slot) for ev in log.events)


def run_schedule(arch: Architecture, schedule: CompiledSchedule, *,
                 reset: bool = True) -> tuple[ActivityTrace, BindingLog, Architecture]:
    """Drive the board with a compiled plan, recording category activity.

    Returns the activity trace, the binding log (pair-cell latch events,
    tagged with the commitment window active at the moment of latching), and
    the board itself for further runs.
    """
    net = arch.net
    cfg = arch.config
    if schedule.base_row + len(schedule.structure.nodes) > arch.n:
        raise CapacityError(
            f"schedule needs rows up to "
            f"{schedule.base_row + len(schedule.structure.nodes) - 1} "
            f"but the board has {arch.n}")
    if reset:
        net.reset_state()
    dt = net.params.dt_ms
    steps = int(round(schedule.duration_ms / dt))
    deltas: dict[int, list[tuple[int, float]]] = {}
    for p in schedule.pulses:
        pop = resolve_target(arch, p.target)
        s0 = max(0, int(round(p.t0 / dt)))
        s1 = min(steps, int(round(p.t1 / dt)))
        if s1 <= s0:
            continue
        deltas.setdefault(s0, []).append((pop, p.level))
        if s1 < steps:
            deltas.setdefault(s1, []).append((pop, -p.level))

    cat = arch.category
    gi = np.flatnonzero(cat == Category.GATING)
    mi = np.flatnonzero(cat == Category.MEMORY)
    oi = np.flatnonzero(cat == Category.OTHER)
    wm_flat = arch.cell["wm_a"].reshape(-1)
    open_thr = cfg.thresholds.open
    logged = net.e[wm_flat] >= open_thr
    times = np.empty(steps)
    g_sum = np.empty(steps)
    m_sum = np.empty(steps)
    o_sum = np.empty(steps)
    events: list[BindingEvent] = []
    ext = np.zeros(net.n)
    for s in range(steps):
        for pop, d in deltas.get(s, ()):
            ext[pop] += d
        net.step(ext)
        tnow = (s + 1) * dt
        times[s] = tnow
        e = net.e
        g_sum[s] = e[gi].sum()
        m_sum[s] = e[mi].sum()
        o_sum[s] = e[oi].sum()
        hot = e[wm_flat] >= open_thr
        fresh = hot & ~logged
        if fresh.any():
            for flat in np.flatnonzero(fresh):
                i, j = divmod(int(flat), arch.n)
                # A latch needs a couple hundred ms of sustained flow, so
                # the feed that produced it was active well before the
                # crossing; looking back avoids crediting the next feed
                # when the crossing lands at a feed boundary.
                slot = None
                for probe in (tnow - 100.0, tnow):
                    for f0, f1, sl, _hn, _dn in schedule.feeds:
                        if f0 <= probe <= f1:
                            slot = sl
                            break
                    if slot is not None:
                        break
                if slot is None:
                    for f0, f1, sl, _hn, _dn in schedule.feeds:
                        if f1 < tnow <= f1 + 50.0:
                            slot = sl
                            break
                if slot is None:
                    sa_row = arch.sa_a[DEP, j]
                    slot = SLOTS[int(np.argmax(e[sa_row]))]
                events.append(BindingEvent(
                    t_ms=tnow, head_row=i, dep_row=j, slot=slot,
                    head_type=schedule.row_type.get(i),
                    dep_type=schedule.row_type.get(j)))
            logged |= fresh
    trace = ActivityTrace(
        times=times, gating=g_sum, wm=m_sum, other=o_sum,
        word_onsets=tuple(m[0] for m in schedule.word_markers),
        word_labels=tuple(m[2] for m in schedule.word_markers),
        size=arch.n, fingerprint=cfg.fingerprint)
    return trace, BindingLog(events=tuple(events)), arch


def latched_cells(arch: Architecture,
                  threshold: float | None = None) -> frozenset[tuple[int, int]]:
    """Pair cells whose memory is holding: ``(head_row, dep_row)`` set."""
    thr = arch.config.thresholds.open if threshold is None else threshold
    wm = arch.net.e[arch.cell["wm_a"]]
    return frozenset((int(i), int(j)) for i, j in np.argwhere(wm >= thr))


def binding_state(arch: Architecture) -> tuple[frozenset, frozenset]:
    """Durable state snapshot: latched pair cells + latched slot routes.

    Returns ``(cells, routes)`` where ``cells`` is a set of
    ``(head_row, dep_row)`` and ``routes`` a set of ``(side, row, slot)``.
    Used to check that retrieval leaves stored structure untouched.
    """
    thr = arch.config.thresholds.open
    e = arch.net.e
    cells = frozenset((int(i), int(j))
                      for i, j in np.argwhere(e[arch.cell["wm_a"]] >= thr))
    routes = set()
    wm1 = e[arch.slotg["wm1_a"]]
    for side, row, sl in np.argwhere(wm1 >= thr):
        routes.add(("H" if side == 0 else "D", int(row), SLOTS[int(sl)]))
    return cells, frozenset(routes)


def row_labels(structure: StructureSpec, *, base_row: int = 0,
               convention: str = "types") -> dict[int, str]:
    """Display names for rows: per-type numbering or explicit row numbers."""
    labels: dict[int, str] = {}
    counts: dict[str, int] = {}
    for k, nd in enumerate(structure.nodes):
        ty = nd.lex.value
        counts[ty] = counts.get(ty, 0) + 1
        if convention == "types":
            labels[base_row + k] = f"{ty}{counts[ty]}"
        else:
            labels[base_row + k] = f"r{base_row + k}:{ty}"
    return labels


@dataclass(frozen=True)
class RoundTrip:
    """Outcome of encoding a structure and reading the bindings back."""

    structure: StructureSpec
    ok: bool
    realized: frozenset[tuple[int, int, str]]
    expected: frozenset[tuple[int, int, str]]
    missing: frozenset[tuple[int, int, str]]
    erroneous: frozenset[tuple[int, int, str]]
    trace: ActivityTrace
    log: BindingLog
    schedule: CompiledSchedule


def verify_round_trip(structure: StructureSpec, *, size: int | None = None,
                      config: Config | None = None, policy: str = "delayed",
                      word_ms: float | None = None,
                      pauses: dict[int, float] | None = None,
                      arch: Architecture | None = None) -> RoundTrip:
    """Encode a structure on a fresh (or given) board and compare edge sets."""
    if arch is not None:
        cfg = arch.config
    else:
        cfg = config if config is not None else load_config()
        n = size if size is not None else max(15, len(structure.nodes))
        arch = build_architecture(n, cfg)
    schedule = compile_schedule(structure, cfg, policy=policy, n=arch.n,
                                word_ms=word_ms, pauses=pauses)
    trace, log, _ = run_schedule(arch, schedule)
    realized = extract_bindings(log)
    expected = structure.edge_triples
    return RoundTrip(structure=structure, ok=realized == expected,
                     realized=realized, expected=expected,
                     missing=expected - realized,
                     erroneous=realized - expected,
                     trace=trace, log=log, schedule=schedule)


# --------------------------------------------------------------------------
# multi-sentence storage and question answering
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StoreRecord:
    """Several sentences encoded side by side on one board."""

    sentences: tuple[StructureSpec, ...]
    base_rows: tuple[int, ...]
    schedules: tuple[CompiledSchedule, ...]
    logs: tuple[BindingLog, ...]
    traces: tuple[ActivityTrace, ...]
    row_token: dict[int, str | None]
    row_type: dict[int, LexicalType]

    def rows_for(self, token: str) -> tuple[int, ...]:
        return tuple(r for r, tok in sorted(self.row_token.items())
                     if tok == token)


def store_sentences(arch: Architecture, specs, *,
                    policy: str = "delayed") -> StoreRecord:
    """Encode each sentence in its own row block, in order, on one board."""
    base = 0
    schedules, logs, traces = [], [], []
    row_token: dict[int, str | None] = {}
    row_type: dict[int, LexicalType] = {}
    bases = []
    for i, spec in enumerate(specs):
        sched = compile_schedule(spec, arch.config, policy=policy,
                                 base_row=base, n=arch.n)
        trace, log, _ = run_schedule(arch, sched, reset=(i == 0))
        schedules.append(sched)
        logs.append(log)
        traces.append(trace)
        row_token.update(sched.row_token)
        row_type.update(sched.row_type)
        bases.append(base)
        base += len(spec.nodes)
    return StoreRecord(sentences=tuple(specs), base_rows=tuple(bases),
                       schedules=tuple(schedules), logs=tuple(logs),
                       traces=tuple(traces), row_token=row_token,
                       row_type=row_type)


@dataclass(frozen=True)
class QuestionSpec:
    """A three-position probe; exactly one position is the queried '?'."""

    subject: str | None
    verb: str | None
    obj: str | None


def parse_question(text: str) -> QuestionSpec:
    tokens = text.split()
    if len(tokens) != 3:
        raise ValueError("a question needs exactly three tokens, e.g. 'Sue likes ?'")
    if tokens.count("?") != 1:
        raise ValueError("a question needs exactly one '?' position")
    sub, verb, obj = (None if tok == "?" else tok for tok in tokens)
    return QuestionSpec(subject=sub, verb=verb, obj=obj)


_CANON_EDGES = frozenset({(1, 0, "SG2"), (2, 0, "SG1"), (3, 2, "SG3")})


def _check_store_shape(store: StoreRecord) -> None:
    for spec in store.sentences:
        nd = spec.nodes
        ok = (len(nd) == 4
              and nd[0].token is None and nd[0].lex is LexicalType.S
              and nd[1].token and nd[1].lex in (LexicalType.N, LexicalType.Pr)
              and nd[2].token and nd[2].lex is LexicalType.V
              and nd[3].token and nd[3].lex is LexicalType.N
              and spec.edge_triples == _CANON_EDGES)
        if not ok:
            raise ValueError(
                f"question answering expects simple subject-verb-object "
                f"sentences; '{spec.name}' has a different shape")


def _question_phases(store: StoreRecord, q: QuestionSpec,
                     competition: bool) -> list[dict]:
    rows = store.rows_for
    type_of = store.row_type

    def types_of(rws):
        return sorted({type_of[r].value for r in rws})

    if q.obj is None:
        s_rows, v_rows = rows(q.subject), rows(q.verb)
        p1 = dict(label="subject->roots", lines=s_rows, bind=types_of(s_rows),
                  selects=[f"dep:{ty}" for ty in types_of(s_rows)],
                  wipes=[("D", "SG2")], feeds=[("D", "SG2")],
                  reads=[("H", "SG1")])
        if competition:
            return [p1,
                    dict(label="verb filter", lines=v_rows, bind=["V"],
                         feeds=[("H", "SG1")], reads=[("D", "SG1")],
                         comparator="V"),
                    dict(label="object readout", lines=v_rows,
                         selects=["head:V"], wipes=[("H", "SG3")],
                         feeds=[("H", "SG3")], reads=[("D", "SG3")])]
        return [p1,
                dict(label="verb flood", lines=v_rows, bind_held=["V"],
                     feeds=[("H", "SG1")], reads=[("D", "SG1")]),
                dict(label="arm all verbs", lines=v_rows, selects=["head:V"],
                     wipes=[("H", "SG3")], feeds=[("H", "SG1")],
                     reads=[("D", "SG1")]),
                dict(label="object flood", feeds=[("H", "SG3")],
                     reads=[("D", "SG3")])]

    if q.subject is None:
        v_rows, o_rows = rows(q.verb), rows(q.obj)
        both = sorted(set(v_rows) | set(o_rows))
        o_types = types_of(o_rows)
        return [dict(label="object filter", lines=both,
                     bind=sorted({"V", *o_types}), selects=["head:V"],
                     wipes=[("H", "SG3")], feeds=[("H", "SG3")],
                     reads=[("D", "SG3")],
                     comparator=o_types[0] if competition else None),
                dict(label="verb confirm", lines=both,
                     selects=[f"dep:{ty}" for ty in o_types],
                     wipes=[("D", "SG3")], feeds=[("D", "SG3")],
                     reads=[("H", "SG3")],
                     comparator="V" if competition else None),
                dict(label="root trace", lines=v_rows, selects=["dep:V"],
                     wipes=[("D", "SG1")], feeds=[("D", "SG1")],
                     reads=[("H", "SG2")]),
                dict(label="subject flood", feeds=[("H", "SG2")],
                     reads=[("D", "SG2")])]

    s_rows, o_rows = rows(q.subject), rows(q.obj)
    return [dict(label="subject->roots", lines=s_rows, bind=types_of(s_rows),
                 selects=[f"dep:{ty}" for ty in types_of(s_rows)],
                 wipes=[("D", "SG2")], feeds=[("D", "SG2")],
                 reads=[("H", "SG1")]),
            dict(label="verb flood", bind_held=["V"], feeds=[("H", "SG1")],
                 reads=[("D", "SG1")]),
            dict(label="object confirm", lines=o_rows, bind=types_of(o_rows),
                 selects=[f"dep:{ty}" for ty in types_of(o_rows)],
                 wipes=[("D", "SG3")], feeds=[("D", "SG3")],
                 reads=[("H", "SG3")])]


def _phase_pulses(phases: list[dict],
                  config: Config) -> tuple[list[Pulse], float, list[str]]:
    t = config.timing
    hop, gap = t.query_hop_ms, t.query_gap_ms
    count = len(phases)
    starts = [200.0 + i * (hop + gap) for i in range(count)]
    horizon = starts[-1] + hop + t.query_tail_ms
    pulses = [Pulse("mute-rivalry", 0.0, horizon + 10.0, t.signal_level)]
    for side in ("H", "D"):
        for g in SLOTS:
            pulses.append(Pulse(f"wipe:{side}:{g}", 10.0, 10.0 + t.wipe_len,
                                t.signal_level))
    for lt in LexicalType:
        pulses.append(Pulse(f"clear:{lt.value}", 10.0, 10.0 + t.clear_len,
                            t.signal_level))
    labels = []
    for i, ph in enumerate(phases):
        p0 = starts[i]
        end = horizon if i == count - 1 else p0 + hop
        for r in ph.get("lines", ()):
            pulses.append(Pulse(f"line:{r}", p0, end, t.query_drive))
        for ty in ph.get("bind", ()):
            pulses.append(Pulse(f"bind:{ty}", p0 + 50, p0 + 120, t.signal_level))
        for ty in ph.get("bind_held", ()):
            pulses.append(Pulse(f"bind:{ty}", p0 + 50, end, t.signal_level))
        for sel in ph.get("selects", ()):
            pulses.append(Pulse(sel, p0 + 150, end, t.signal_level))
        for side, g in ph.get("wipes", ()):
            pulses.append(Pulse(f"wipe:{side}:{g}", p0 + 150, p0 + 180,
                                t.signal_level))
        for side, g in ph.get("feeds", ()):
            pulses.append(Pulse(f"feed:{side}:{g}", p0 + 200, end,
                                t.signal_level))
        for side, g in ph.get("reads", ()):
            pulses.append(Pulse(f"read:{side}:{g}", p0 + 200, end,
                                t.signal_level))
        comp = ph.get("comparator")
        if comp:
            pulses.append(Pulse(f"clear:{comp}", p0 + 400, p0 + 550,
                                t.signal_level))
            pulses.append(Pulse(f"bind:{comp}", p0 + 415, p0 + 550,
                                t.signal_level))
        labels.append(ph.get("label", f"phase {i + 1}"))
    return pulses, horizon, labels


@dataclass(frozen=True)
class QueryResult:
    """Answer set plus the evidence behind it."""

    question: QuestionSpec
    competition: bool
    answers: frozenset[str]
    answer_rows: tuple[int, ...]
    word_levels: dict[int, float]
    phases: tuple[str, ...]


def run_question(arch: Architecture, store: StoreRecord,
                 question: QuestionSpec | str, *,
                 competition: bool = True) -> QueryResult:
    """Answer a three-position probe against the stored sentences.

    Retrieval is content-addressable: the known tokens' rows are re-driven
    and their attachments replayed through the latched pair cells under a
    rivalry mute, so nothing stored is altered. Word populations still
    active at the end of the last phase, excluding the probe's own tokens
    and covert rows, are the answers.
    """
    q = parse_question(question) if isinstance(question, str) else question
    _check_store_shape(store)
    known = [tok for tok in (q.subject, q.verb, q.obj) if tok is not None]
    for tok in known:
        if not store.rows_for(tok):
            return QueryResult(question=q, competition=competition,
                               answers=frozenset(), answer_rows=(),
                               word_levels={},
                               phases=(f"no stored rows for '{tok}'",))
    phases = _question_phases(store, q, competition)
    pulses, horizon, labels = _phase_pulses(phases, arch.config)
    t0 = arch.net.t_ms
    record = {f"word:{r}": int(arch.word[r]) for r in range(arch.n)}
    ts = run_pulses(arch, pulses, horizon + 10.0, record=record, reset=False)
    measure = t0 + horizon - 10.0
    known_rows = set()
    for tok in known:
        known_rows.update(store.rows_for(tok))
    open_thr = arch.config.thresholds.open
    levels = {r: ts.value_at(f"word:{r}", measure) for r in range(arch.n)}
    answer_rows = tuple(r for r in range(arch.n)
                        if levels[r] >= open_thr and r not in known_rows
                        and store.row_token.get(r))
    answers = frozenset(store.row_token[r] for r in answer_rows)
    return QueryResult(question=q, competition=competition, answers=answers,
                       answer_rows=answer_rows, word_levels=levels,
                       phases=tuple(labels))


def answer_question(arch: Architecture, store: StoreRecord,
                    question: QuestionSpec | str, *,
                    competition: bool = True) -> frozenset[str]:
    """The answer token set for a probe like ``"Sue likes ?"``."""
    return run_question(arch, store, question, competition=competition).answers


# --------------------------------------------------------------------------
# named parsing scenarios
# --------------------------------------------------------------------------

SCENARIO_NAMES = ("upa1a", "upa1b", "upa4a", "upa4b", "gp6", "gp14",
                  "upa13a", "upa13b", "pb1", "ae6",
                  "mason_ua", "mason_ap", "mason_au", "mason_gp")


@dataclass(frozen=True)
class ScenarioReport:
    """Outcome of one named scenario run."""

    name: str
    structure_name: str
    policy: str
    ok: bool
    realized: frozenset[tuple[int, int, str]]
    expected: frozenset[tuple[int, int, str]]
    forbidden: frozenset[tuple[int, int, str]]
    missing: frozenset[tuple[int, int, str]]
    erroneous: frozenset[tuple[int, int, str]]
    trace: ActivityTrace
    log: BindingLog
    schedule: CompiledSchedule

    def render(self) -> str:
        verdict = "reproduced" if self.ok else "NOT reproduced"
        out = [f"scenario {self.name} on '{self.structure_name}' "
               f"({self.policy}): {verdict}",
               f"  realized attachments: {sorted(self.realized)}"]
        if self.missing:
            out.append(f"  missing: {sorted(self.missing)}")
        if self.erroneous:
            out.append(f"  erroneous: {sorted(self.erroneous)}")
        if self.forbidden:
            blocked = sorted(self.forbidden - self.realized)
            out.append(f"  confirmed absent: {blocked}")
        return "\n".join(out)


def scenario_run(name: str | ScenarioSpec, *, size: int | None = None,
                 config: Config | None = None, word_ms: float | None = None,
                 pauses: dict[int, float] | None = None,
                 scenarios: dict[str, ScenarioSpec] | None = None,
                 structure: StructureSpec | None = None) -> ScenarioReport:
    """Run a named scenario on a fresh board and score the realized edges."""
    if isinstance(name, ScenarioSpec):
        sc = name
    else:
        table = scenarios if scenarios is not None else load_bundled_scenarios()
        if name not in table:
            raise KeyError(f"unknown scenario '{name}'; available: "
                           + ", ".join(sorted(table)))
        sc = table[name]
    struct = structure if structure is not None \
        else load_corpus_structure(sc.structure)
    cfg = config if config is not None else load_config()
    n = size if size is not None else max(15, len(struct.nodes))
    arch = build_architecture(n, cfg)
    schedule = compile_schedule(struct, cfg, scenario=sc, n=n,
                                word_ms=word_ms, pauses=pauses)
    trace, log, _ = run_schedule(arch, schedule)
    realized = extract_bindings(log)
    drops = set(sc.drops)
    absent = frozenset((e.dep, e.head, e.slot) for e in sc.expect_absent)
    base = {(e.dep, e.head, e.slot) for e in struct.edges if e not in drops}
    extra = {(e.dep, e.head, e.slot) for e, _ in sc.extras}
    expected = frozenset((base - absent) | extra)
    missing = expected - realized
    erroneous = realized - expected
    return ScenarioReport(
        name=sc.name, structure_name=struct.name, policy=sc.policy,
        ok=not missing and not erroneous, realized=realized,
        expected=expected, forbidden=absent, missing=missing,
        erroneous=erroneous, trace=trace, log=log, schedule=schedule)


run_scenario = scenario_run

# Interface aliases for the control-plan types.
ControlEvent = Pulse
ControlSchedule = CompiledSchedule
