"""Configuration loading for the popboard simulator.

All tunable numbers live in one key=value config file (the canonical
calibrated set ships as ``data/params.cfg``). The file format is flat
``section.key = value`` lines with ``#`` comments. A different file can be
selected with the ``POPBOARD_CONFIG`` environment variable or passed
explicitly to :func:`load_config`.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

ENV_VAR = "POPBOARD_CONFIG"


@dataclass(frozen=True)
class PopulationParams:
    """Shared rate-model constants for every population pair."""

    tau_e: float = 20.0        # excitatory time constant (ms)
    tau_i: float = 10.0        # inhibitory time constant (ms); must be < tau_e
    tau_adapt: float = 6000.0  # adaptation time constant (ms)
    gain: float = 0.2          # sigmoid slope
    thresh: float = 50.0       # sigmoid midpoint (input units)
    max_rate: float = 100.0    # saturation rate (spikes/ms)
    w_ee: float = 0.0          # within-pair E->E
    w_ei: float = 0.0          # within-pair E->I
    w_ie: float = 0.0          # within-pair I->E
    w_ii: float = 0.0          # within-pair I->I
    dt_ms: float = 1.0         # integration step (ms)


@dataclass(frozen=True)
class AdaptLevels:
    """Adaptation strength per population class (logged overrides)."""

    none: float = 0.0
    memory: float = 0.08    # persistent latch loops
    assembly: float = 0.45  # recency-bearing slot assemblies


@dataclass(frozen=True)
class CircuitWeights:
    """Connection weights used by the circuit templates and the board."""

    # selection gate internals
    gate_drive: float = 1.2      # start -> gate
    gate_inhdrive: float = 1.0   # start -> inhib
    gate_block: float = 1.5      # inhib -| gate
    gate_open: float = 1.2       # dis_inhib -| inhib
    gate_signal: float = 1.2     # control signal -> dis_inhib
    gate_input: float = 1.0      # source -> start
    gate_output: float = 1.0     # gate -> target
    # working-memory loops
    wm_mutual: float = 1.0       # A <-> B
    wm_latch: float = 1.0        # gate -> A
    wm_hold: float = 1.0         # A -> dis_inhib
    # board-level attachments
    word_line: float = 1.2           # input line -> word population
    word_to_gate: float = 0.525      # word population -> lexical gate start
    lex_select_in: float = 0.45      # lexical assembly -> select-gate start
    word_to_select: float = 0.45     # word population -> select-gate start
    select_to_slot: float = 1.0      # select-gate out -> slot gate start
    slot_to_assembly: float = 1.0    # slot gate out -> slot assembly
    assembly_readout: float = 0.55   # slot assembly -> feed-gate start
    feed_to_relay: float = 0.34      # feed-gate out -> relay (binary permit)
    readout_tap: float = 0.32        # feed-gate start -> relay (freshness bias)
    relay_to_column: float = 0.52    # relay -> column in-populations
    relay_to_compete: float = 0.80   # relay -> rivalry population (race kick)
    flow_to_compete: float = 0.35    # slot gate out -> rivalry population
    compete_cross: float = 1.10      # rivalry -| rival rows' rivalry
    compete_boost: float = 0.27      # rivalry winner -> own relay (saturate)
    compete_protect: float = 0.90    # rivalry -| own-row damper
    damper_cross: float = 0.52       # rivalry -> rival rows' dampers
    damper_block: float = 1.5        # damper -| local relay feed
    damper_clear: float = 0.0        # damper -| local slot assembly (off)
    relay_self: float = 0.40         # relay -> own damper
    compete_mute: float = 1.5        # rivalry guard -| rivalry
    mark_mute: float = 1.5           # rivalry guard -| completion marker
    guard_signal: float = 1.2        # competition block signal -> guard
    guard_boost: float = 0.30        # guard -> relay (query flow bypass)
    commit_mark: float = 0.40        # relay -> completion marker
    relay_echo: float = 0.35         # column out -> completion marker
    mark_clear: float = 0.80         # completion marker -| own slot assembly
    mark_to_block: float = 1.0       # completion marker -> row blocker
    block_clear: float = 1.4         # row blocker -| sibling memories
    column_in: float = 1.0           # column in-pop -> cell gate start
    column_open: float = 1.2         # column in-pop -> cell dis_inhib
    cell_out: float = 1.2            # cell gate -> column out-pop
    out_select_in: float = 1.0       # column out -> retrieval gate start
    retrieve_to_slot: float = 1.2    # retrieval gate out -> slot gate start
    slot_to_word: float = 0.68       # slot gate out -> word population
    retro_assembly: float = 1.0      # readout slot gate -> slot assembly
    kill_pulse: float = 0.65         # inhibitory control pulse -> memory pops
    word_kill: float = 0.67          # inhibitory control pulse -> word pops


@dataclass(frozen=True)
class Timing:
    """Control-schedule timing constants (ms)."""

    word_ms: float = 600.0       # default input window per token
    tail_ms: float = 600.0       # silent settling tail after the last token
    drive_level: float = 100.0   # external drive for an active input line
    signal_level: float = 100.0  # external drive for a control signal
    bind_lead: float = 20.0      # bind pulse onset after the word onset
    bind_len: float = 60.0       # lexical bind pulse width
    create_len: float = 50.0     # slot-assembly creation pulse width
    create_lead: float = 60.0    # row re-drive time before a creation pulse
    commit_len: float = 300.0    # commitment co-activation window
    settle_ms: float = 80.0      # assembly ramp time between creation and feed
    op_gap: float = 5.0          # serialized-channel gap between pulses
    wipe_len: float = 30.0       # hygiene wipe pulse width (side-slot)
    clear_len: float = 60.0      # hygiene type-clear pulse width
    hygiene_delay_ms: float = 350.0  # quiet time before end-of-run hygiene
    query_hop_ms: float = 700.0  # retrieval phase length
    query_gap_ms: float = 200.0  # decay gap between retrieval phases
    query_drive: float = 57.0    # drive level for known tokens in questions
    disamb_ms: float = 150.0     # type-competition pulse width in questions
    query_tail_ms: float = 250.0  # readout settling time


@dataclass(frozen=True)
class Thresholds:
    """Rate thresholds used by analysis and assertions (spikes/ms)."""

    open: float = 25.0     # a population at/above this is active/open
    sustain: float = 10.0  # memory loops must stay above this to count
    baseline_factor: float = 2.0  # "near zero" = factor x resting rate


@dataclass(frozen=True)
class Config:
    pop: PopulationParams = field(default_factory=PopulationParams)
    adapt: AdaptLevels = field(default_factory=AdaptLevels)
    weights: CircuitWeights = field(default_factory=CircuitWeights)
    timing: Timing = field(default_factory=Timing)
    thresholds: Thresholds = field(default_factory=Thresholds)
    fingerprint: str = "defaults"

    @property
    def resting_rate(self) -> float:
        """Equilibrium rate of an undriven population."""
        import math

        return self.pop.max_rate / (
            1.0 + math.exp(self.pop.gain * self.pop.thresh)
        )


_SECTIONS = {
    "pop": PopulationParams,
    "adapt": AdaptLevels,
    "weights": CircuitWeights,
    "timing": Timing,
    "thresholds": Thresholds,
}


def default_config_path() -> Path:
    """Path of the bundled canonical parameter file."""
    return Path(str(resources.files("popboard").joinpath("data/params.cfg")))


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Load a config file (explicit path > env var > bundled defaults)."""
    if path is None:
        path = os.environ.get(ENV_VAR) or default_config_path()
    path = Path(path)
    text = path.read_text()
    values: dict[str, dict[str, float]] = {name: {} for name in _SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'section.key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if "." not in key:
            raise ValueError(f"{path}:{lineno}: key {key!r} missing section")
        section, _, name = key.partition(".")
        if section not in _SECTIONS:
            raise ValueError(f"{path}:{lineno}: unknown section {section!r}")
        known = {f.name for f in fields(_SECTIONS[section])}
        if name not in known:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[section][name] = float(val.strip())
    fingerprint = hashlib.sha256(text.encode()).hexdigest()[:12]
    return Config(
        pop=PopulationParams(**values["pop"]),
        adapt=AdaptLevels(**values["adapt"]),
        weights=CircuitWeights(**values["weights"]),
        timing=Timing(**values["timing"]),
        thresholds=Thresholds(**values["thresholds"]),
        fingerprint=fingerprint,
    )


def dump_config(config: Config) -> str:
    """Render a config back to the key=value file format."""
    out: list[str] = ["# popboard parameter set (generated)"]
    for section, cls in _SECTIONS.items():
        obj = getattr(config, section)
        out.append("")
        for f in fields(cls):
            out.append(f"{section}.{f.name} = {getattr(obj, f.name)!r}")
    return "\n".join(out) + "\n"
