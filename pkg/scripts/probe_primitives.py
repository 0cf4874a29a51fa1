"""Workbench: probe primitive circuit behaviours under the current config."""
from __future__ import annotations

import numpy as np

from popboard.config import load_config
from popboard.dynamics import Network
from popboard.circuits import (
    build_selection_gate,
    build_working_memory,
    build_binding_gate,
)

cfg = load_config()
P, W, A = cfg.pop, cfg.weights, cfg.adapt
REST = cfg.resting_rate
print(f"resting rate = {REST:.5f}")


def sim(net, events, duration, watch):
    """events: list of (t0, t1, idx, level). watch: {name: idx}; returns dict of arrays."""
    net.freeze()
    ext = np.zeros(net.n)
    out = {k: [] for k in watch}
    steps = int(duration)
    for t in range(steps):
        ext[:] = 0.0
        for (t0, t1, idx, level) in events:
            if t0 <= t < t1:
                ext[idx] += level
        net.step(ext)
        for k, idx in watch.items():
            out[k].append(net.e[idx] if k[0] != "I" else net.i[idx])
    return {k: np.asarray(v) for k, v in out.items()}


# --- 1. single population step response --------------------------------------
net = Network(P)
p0 = net.add_populations(1)
r = sim(net, [(50, 450, p0, 100.0)], 600, {"e": p0, "I:i": p0})
print("\n[1] single pop: baseline", r["e"][40], "peak", r["e"][:460].max(),
      "t_half_e", np.argmax(r["e"] > 50), "t_half_i", np.argmax(r["I:i"] > 50),
      "after off", r["e"][-1])

# --- 2. working memory latch & classes ----------------------------------------
for name, ad in [("memory", A.memory), ("assembly", A.assembly)]:
    net = Network(P)
    wm = build_working_memory(net, W, adapt=ad)
    r = sim(net, [(50, 450, wm.pop_a, 100.0)], 6000, {"a": wm.pop_a})
    a = r["a"]
    print(f"\n[2] wm[{name}]: t=0.5s {a[500]:.2f} 1s {a[1000]:.2f} 2s {a[2000]:.2f}"
          f" 3s {a[3000]:.2f} 4.5s {a[4500]:.2f} 6s {a[-1]:.2f}")

# --- 3. selection gate: closed leak / open throughput --------------------------
net = Network(P)
g = build_selection_gate(net, W)
x = net.add_populations(1)
sig = net.add_populations(1)
net.connect(x, g.start, W.gate_input)
net.connect(sig, g.dis_inhib, W.gate_signal)
y = net.add_populations(1)
net.connect(g.gate, y, W.gate_output)
# X only (closed), then X+signal (open)
r = sim(net, [(50, 2000, x, 100.0), (1000, 1100, sig, 100.0)], 2000,
        {"gate": g.gate, "start": g.start, "inhib": g.inhib, "dis": g.dis_inhib, "y": y})
print("\n[3] gate closed: gate@900", r["gate"][900], " open: gate@1090", r["gate"][1090],
      "gate@1990 (sig off)", r["gate"][1990])

# --- 4. binding gate: latch + persistence + no-signal control ------------------
net = Network(P)
bg = build_binding_gate(net, W, A)
x = net.add_populations(1)
sig = net.add_populations(1)
net.connect(x, bg.sel.start, W.gate_input)
net.connect(sig, bg.sel.dis_inhib, W.gate_signal)
events = [(50, 350, x, 100.0), (60, 110, sig, 100.0), (5000, 5300, x, 100.0)]
r = sim(net, events, 6000, {"gate": bg.sel.gate, "wm": bg.wm.pop_a})
print("\n[4] binding gate: wm@400", r["wm"][400], "wm@4900", r["wm"][4900],
      "re-drive gate@5290", r["gate"][5290], "no-渦signal? gate@40", r["gate"][40])

# control: X without signal never latches
net = Network(P)
bg = build_binding_gate(net, W, A)
x = net.add_populations(1)
net.connect(x, bg.sel.start, W.gate_input)
r = sim(net, [(50, 2050, x, 100.0)], 2500, {"gate": bg.sel.gate, "wm": bg.wm.pop_a})
print("[4b] no signal: gate max", r["gate"].max(), "wm max", r["wm"].max())

# --- 5. kill pulse on latched wm -----------------------------------------------
net = Network(P)
wm = build_working_memory(net, W, adapt=A.memory)
kill = net.add_populations(1)
net.connect(kill, wm.pop_a, W.kill_pulse, inhibitory=True)
net.connect(kill, wm.pop_b, W.kill_pulse, inhibitory=True)
r = sim(net, [(50, 450, wm.pop_a, 100.0), (1000, 1020, kill, 100.0)], 2000,
        {"a": wm.pop_a})
print("\n[5] kill pulse: wm@990", r["a"][990], "wm@1990", r["a"][1990])
