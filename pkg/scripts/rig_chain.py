"""Calibration rig: full encode->commit->retrieve chain on a small board.

Scenarios (each an independent run):
  A  solo commit          one dep + one head assembly, long commit probe
  B  fresh contest        two dep candidates, ages ~840 vs ~240 ms
  C  stale contest        same rows, ages ~2140 vs ~1540 ms
  D  three-way contest    ages ~1140 / ~540 / ~260 ms
  E  retrieval hop        after B's commit: dep word -> head word readout

Prints latencies, levels, and PASS/FAIL lines per scenario; with --sweep,
grids over competition weights and summarizes which combos pass all.
"""

import argparse
import sys
import time
from dataclasses import replace

from popboard.blackboard import build_architecture, HEAD, DEP
from popboard.config import load_config
from popboard.control import Pulse, run_pulses
from popboard.grammar import SLOTS, LexicalType

SG = SLOTS.index("SG2")
SLOT = "SG2"
N = list(LexicalType).index(LexicalType.N)
V = list(LexicalType).index(LexicalType.V)


def word_ops(k, t, typ):
    return [
        Pulse(f"line:{k}", t, t + 300),
        Pulse(f"bind:{typ}", t + 20, t + 80),
    ]


def create(side, typ, t, length=50.0):
    sel = "head" if side == "H" else "dep"
    return [
        Pulse(f"{sel}:{typ}", t, t + length),
        Pulse(f"latch:{side}:{SLOT}", t, t + length),
    ]


def commit(t, length):
    return [
        Pulse(f"feed:D:{SLOT}", t, t + length),
        Pulse(f"feed:H:{SLOT}", t, t + length),
    ]


def recorder_map(arch):
    rec = {}
    for k in range(4):
        rec[f"word{k}"] = int(arch.word[k])
    rec["lex0N"] = int(arch.lex_a[0, N])
    rec["lex2N"] = int(arch.lex_a[2, N])
    for k in (0, 2, 3):
        rec[f"saD{k}"] = int(arch.sa_a[DEP, k, SG])
        rec[f"relD{k}"] = int(arch.relay[DEP, k, SG])
        rec[f"rivD{k}"] = int(arch.rival[DEP, k, SG])
        rec[f"dmpD{k}"] = int(arch.damper[DEP, k, SG])
        rec[f"cinD{k}"] = int(arch.col_in[DEP, k])
        rec[f"wm1{k}"] = int(arch.cell["wm_a"][1, k])
    rec["saH1"] = int(arch.sa_a[HEAD, 1, SG])
    rec["relH1"] = int(arch.relay[HEAD, 1, SG])
    rec["cinH1"] = int(arch.col_in[HEAD, 1])
    rec["coutH1"] = int(arch.col_out[HEAD, 1])
    rec["coutD2"] = int(arch.col_out[DEP, 2])
    rec["ginD0"] = int(arch.gin["start"][DEP, 0, SG])
    rec["ginD0g"] = int(arch.gin["gate"][DEP, 0, SG])
    return rec


def base_words(n_dep):
    """Words 0..: dep N at 0, head V at 300, more dep Ns at 600, 900."""
    p = []
    p += word_ops(0, 0, "N") + create("D", "N", 90)
    p += word_ops(1, 300, "V") + create("H", "V", 390)
    if n_dep >= 2:
        p += word_ops(2, 600, "N") + create("D", "N", 690)
    if n_dep >= 3:
        p += word_ops(3, 900, "N") + create("D", "N", 990)
    return p


def run_scenarios(cfg, verbose=True, commit_probe=300.0):
    arch = build_architecture(4, cfg)
    rec = recorder_map(arch)
    out = {"pass": True, "notes": []}

    def check(label, ok, detail=""):
        out["pass"] &= bool(ok)
        if verbose:
            print(f"  [{'PASS' if ok else 'FAIL'}] {label} {detail}")
        if not ok:
            out["notes"].append(label)

    # ---- A: solo commit --------------------------------------------------
    tr = run_pulses(arch, base_words(1) + commit(700, commit_probe), 1500, rec)
    t_sa = tr.first_crossing("saD0", 50, after=90)
    sa_pre = tr.value_at("saD0", 695)
    t_wm = tr.first_crossing("wm10", 50, after=700)
    wm_end = tr.value_at("wm10", 1450)
    sa_d_post = tr.value_at("saD0", 1450)
    sa_h_post = tr.value_at("saH1", 1450)
    if verbose:
        print(f"A solo: SA latch at {t_sa} (creation t=90), SA@695={sa_pre:.2f}")
        print(f"        commit latency {None if t_wm is None else t_wm - 700:.0f} ms"
              if t_wm else "        commit never latched")
        print(f"        wm@1450={wm_end:.2f} saD0@1450={sa_d_post:.3f} "
              f"saH1@1450={sa_h_post:.3f}")
    check("A sa created", t_sa is not None and t_sa - 90 <= 120,
          f"(latency {None if t_sa is None else t_sa - 90})")
    check("A cell latched", t_wm is not None and wm_end >= 90,
          f"(latency {None if t_wm is None else t_wm - 700})")
    check("A auto-clear", sa_d_post < 5 and sa_h_post < 5,
          f"(saD0 {sa_d_post:.2f}, saH1 {sa_h_post:.2f})")
    out["commit_latency"] = None if t_wm is None else t_wm - 700
    out["create_latency"] = None if t_sa is None else t_sa - 90

    # ---- B: fresh contest -------------------------------------------------
    tr = run_pulses(arch, base_words(2) + commit(1000, commit_probe), 1800, rec)
    wmW, wmL = tr.value_at("wm12", 1750), tr.value_at("wm10", 1750)
    loser_sa = tr.value_at("saD0", 1750)
    winner_sa = tr.value_at("saD2", 1750)
    repump = tr.value_at("saD0", 750) - tr.value_at("saD0", 688)
    t_win = tr.first_crossing("wm12", 50, after=1000)
    if verbose:
        print(f"B fresh contest: wm winner={wmW:.1f} loser={wmL:.2f} "
              f"latency={None if t_win is None else t_win - 1000}")
        print(f"  loser SA@1750={loser_sa:.2f} winner SA@1750={winner_sa:.2f} "
              f"repump drift={repump:+.2f}")
    check("B fresh wins", wmW >= 90 and wmL < 10,
          f"(winner {wmW:.1f}, loser {wmL:.2f})")
    check("B no re-pump", abs(repump) < 3.0, f"({repump:+.2f})")
    check("B loser SA survives", loser_sa >= 50, f"({loser_sa:.1f})")
    out["contest_latency"] = None if t_win is None else t_win - 1000

    # ---- C: stale contest -------------------------------------------------
    tr = run_pulses(arch, base_words(2) + commit(2300, commit_probe), 3100, rec)
    wmW, wmL = tr.value_at("wm12", 3050), tr.value_at("wm10", 3050)
    check("C fresher-of-stale wins", wmW >= 90 and wmL < 10,
          f"(winner {wmW:.1f}, loser {wmL:.2f})")

    # ---- D: three-way -----------------------------------------------------
    tr = run_pulses(arch, base_words(3) + commit(1300, commit_probe), 2100, rec)
    w3 = tr.value_at("wm13", 2050)
    w2 = tr.value_at("wm12", 2050)
    w0 = tr.value_at("wm10", 2050)
    check("D freshest of 3 wins", w3 >= 90 and w2 < 10 and w0 < 10,
          f"(ages old->new: {w0:.1f} {w2:.1f} {w3:.1f})")

    # ---- E: retrieval hop after B's commit --------------------------------
    pulses = base_words(2) + commit(1000, commit_probe)
    pulses += [Pulse("clear:N", 1400, 1420), Pulse("clear:V", 1400, 1420),
               Pulse(f"wipe:D:{SLOT}", 1400, 1430),
               Pulse(f"wipe:H:{SLOT}", 1400, 1430),
               Pulse("mute-rivalry", 1450, 2010),
               Pulse("line:2", 1500, 2000),
               Pulse("bind:N", 1520, 1580),
               Pulse("dep:N", 1520, 2000),
               Pulse(f"feed:D:{SLOT}", 1520, 2000),
               Pulse(f"read:H:{SLOT}", 1520, 2000)]
    tr = run_pulses(arch, pulses, 2200, rec)
    cout = tr.window_max("coutH1", 1520, 2010)
    wtgt = tr.window_max("word1", 1520, 2010)
    woff = tr.window_max("word0", 1520, 2010)
    wm_keep = tr.value_at("wm12", 2150)
    if verbose:
        print(f"E retrieval: coutH1 max={cout:.1f} word1 max={wtgt:.1f} "
              f"word0 max={woff:.2f} wm12@1950={wm_keep:.1f}")
    check("E head row read out", cout >= 25, f"({cout:.1f})")
    check("E target word lit", wtgt >= 40, f"({wtgt:.1f})")
    check("E non-path word silent", woff < 5, f"({woff:.2f})")
    check("E cell memory kept", wm_keep >= 90, f"({wm_keep:.1f})")

    # ---- F: failed commit (head assembly gone) -----------------------------
    pulses = base_words(1) + [Pulse(f"wipe:H:{SLOT}", 650, 680)]
    pulses += commit(700, commit_probe)
    tr = run_pulses(arch, pulses, 1500, rec)
    wm_f = tr.value_at("wm10", 1450)
    sa_f = tr.value_at("saD0", 1450)
    check("F no one-sided latch", wm_f < 10, f"(wm {wm_f:.2f})")
    check("F dep SA survives failure", sa_f >= 50, f"({sa_f:.1f})")

    # ---- G: reverse retrieval (head word -> dep word) ----------------------
    pulses = base_words(2) + commit(1000, commit_probe)
    pulses += [Pulse("clear:N", 1400, 1420), Pulse("clear:V", 1400, 1420),
               Pulse(f"wipe:D:{SLOT}", 1400, 1430),
               Pulse(f"wipe:H:{SLOT}", 1400, 1430),
               Pulse("mute-rivalry", 1450, 2010),
               Pulse("line:1", 1500, 2000),
               Pulse("bind:V", 1520, 1580),
               Pulse("head:V", 1520, 2000),
               Pulse(f"feed:H:{SLOT}", 1520, 2000),
               Pulse(f"read:D:{SLOT}", 1520, 2000)]
    tr = run_pulses(arch, pulses, 2200, rec)
    cout_d = tr.window_max("coutD2", 1520, 2010)
    wtgt = tr.window_max("word2", 1520, 2010)
    woff = tr.window_max("word0", 1520, 2010)
    if verbose:
        print(f"G reverse: coutD2 max={cout_d:.1f} word2 max={wtgt:.1f} "
              f"word0 max={woff:.2f}")
    check("G dep row read out", cout_d >= 25, f"({cout_d:.1f})")
    check("G target word lit", wtgt >= 40, f"({wtgt:.1f})")
    check("G loser word silent", woff < 5, f"({woff:.2f})")
    check("G no phantom binding", tr.value_at("wm10", 2150) < 10,
          f"({tr.value_at('wm10', 2150):.2f})")

    # ---- sentence encode for the question scenarios ------------------------
    # rows: 0 = first noun, 1 = clause root (no token), 2 = verb,
    # 3 = second noun; SG2 = root->noun0, SG1 = root->verb, SG3 = verb->noun3
    def clause_encode():
        p = []
        p += [Pulse("line:1", 0, 300), Pulse("bind:S", 20, 80)]
        p += [Pulse("line:0", 300, 600), Pulse("bind:N", 320, 380)]
        p += [Pulse("dep:N", 390, 440), Pulse("latch:D:SG2", 390, 440),
              Pulse("line:1", 445, 495),
              Pulse("head:S", 445, 495), Pulse("latch:H:SG2", 445, 495),
              Pulse("feed:D:SG2", 550, 850), Pulse("feed:H:SG2", 550, 850)]
        p += [Pulse("line:2", 600, 900), Pulse("bind:V", 620, 680)]
        p += [Pulse("dep:V", 690, 740), Pulse("latch:D:SG1", 690, 740),
              Pulse("line:1", 745, 795),
              Pulse("head:S", 745, 795), Pulse("latch:H:SG1", 745, 795),
              Pulse("feed:D:SG1", 850, 1150), Pulse("feed:H:SG1", 850, 1150)]
        p += [Pulse("line:3", 900, 1200), Pulse("bind:N", 920, 980)]
        p += [Pulse("dep:N", 990, 1040), Pulse("latch:D:SG3", 990, 1040),
              Pulse("line:2", 1045, 1095),
              Pulse("head:V", 1045, 1095), Pulse("latch:H:SG3", 1045, 1095),
              Pulse("feed:D:SG3", 1150, 1450), Pulse("feed:H:SG3", 1150, 1450)]
        # retrieval hygiene: stale assemblies wiped, lexical memories cleared
        for s in ("D", "H"):
            for g in ("SG1", "SG2", "SG3"):
                p.append(Pulse(f"wipe:{s}:{g}", 1800, 1830))
        for t in ("N", "V", "S"):
            p.append(Pulse(f"clear:{t}", 1800, 1860))
        return p

    qrec = dict(rec)
    qrec["lex1S"] = int(arch.lex_a[1, list(LexicalType).index(LexicalType.S)])
    qrec["lex2V"] = int(arch.lex_a[2, V])
    qrec["lex3N"] = int(arch.lex_a[3, N])
    qrec["saH1sg2"] = int(arch.sa_a[HEAD, 1, SLOTS.index("SG2")])
    qrec["saH1sg1"] = int(arch.sa_a[HEAD, 1, SLOTS.index("SG1")])
    qrec["wmc10"] = int(arch.cell["wm_a"][1, 0])
    qrec["wmc12"] = int(arch.cell["wm_a"][1, 2])
    qrec["wmc23"] = int(arch.cell["wm_a"][2, 3])
    qrec["word3"] = int(arch.word[3])
    qd = cfg.timing.query_drive

    # ---- H: reverse question (verb+object known, subject queried) ----------
    # line0 is driven as a same-type distractor: its lexical memory must die
    # in the typed sweep while the doubly-fed noun relatches.
    pulses = clause_encode()
    pulses += [Pulse("mute-rivalry", 1780, 4650)]
    pulses += [Pulse("line:2", 1900, 2600, qd), Pulse("line:3", 1900, 2600, qd),
               Pulse("line:0", 1900, 2600, qd),
               Pulse("bind:V", 1950, 2020), Pulse("bind:N", 1950, 2020),
               Pulse("head:V", 2050, 2600),
               Pulse("wipe:H:SG3", 2050, 2080),
               Pulse("feed:H:SG3", 2100, 2600), Pulse("read:D:SG3", 2100, 2600),
               Pulse("clear:N", 2300, 2450), Pulse("bind:N", 2315, 2450)]
    pulses += [Pulse("line:2", 2800, 3500, qd),
               Pulse("dep:V", 2800, 3500),
               Pulse("wipe:D:SG1", 2800, 2830),
               Pulse("feed:D:SG1", 2850, 3500), Pulse("read:H:SG2", 2850, 3500)]
    pulses += [Pulse("feed:H:SG2", 3700, 4645), Pulse("read:D:SG2", 3700, 4645)]
    tr = run_pulses(arch, pulses, 4650, qrec)
    keep = tr.value_at("lex3N", 2700)
    dead = tr.value_at("lex0N", 2700)
    retro = tr.value_at("saH1sg2", 3650)
    ans = tr.window_max("word0", 3700, 4640)
    lit = {k for k in range(4) if tr.value_at(f"word{k}", 4640) >= 25.0}
    # extraction rule: drop rows carrying query tokens (2, 3) and the
    # token-less clause root (1); what remains is the answer set
    answers = lit - {1, 2, 3}
    wm_keep = min(tr.value_at("wmc10", 4640), tr.value_at("wmc12", 4640),
                  tr.value_at("wmc23", 4640))
    if verbose:
        print(f"H subject query: doubly-fed lex={keep:.1f} distractor lex="
              f"{dead:.2f} retro SA={retro:.1f}")
        print(f"  answer word max={ans:.1f} lit@end={sorted(lit)} "
              f"wm min={wm_keep:.1f}")
    check("H doubly-fed lex survives sweep", keep >= 90, f"({keep:.1f})")
    check("H distractor lex dies", dead < 10, f"({dead:.2f})")
    check("H root assembly relit by readout", retro >= 90, f"({retro:.1f})")
    check("H answer set exact", answers == {0}, f"({sorted(answers)})")
    check("H bindings kept", wm_keep >= 90, f"({wm_keep:.1f})")

    # ---- I: forward question (subject+verb known, object queried) ----------
    pulses = clause_encode()
    pulses += [Pulse("mute-rivalry", 1780, 4650)]
    pulses += [Pulse("line:0", 1900, 2600, qd), Pulse("bind:N", 1950, 2020),
               Pulse("dep:N", 2050, 2600),
               Pulse("wipe:D:SG2", 2050, 2080),
               Pulse("feed:D:SG2", 2100, 2600), Pulse("read:H:SG1", 2100, 2600)]
    pulses += [Pulse("line:2", 2800, 3500, qd),
               Pulse("feed:H:SG1", 2800, 3500), Pulse("read:D:SG1", 2800, 3500),
               Pulse("clear:V", 3200, 3350), Pulse("bind:V", 3215, 3350)]
    pulses += [Pulse("line:2", 3700, 4645, qd),
               Pulse("head:V", 3700, 4645),
               Pulse("wipe:H:SG3", 3700, 3730),
               Pulse("feed:H:SG3", 3750, 4645), Pulse("read:D:SG3", 3750, 4645)]
    tr = run_pulses(arch, pulses, 4650, qrec)
    retro = tr.value_at("saH1sg1", 2750)
    vkeep = tr.value_at("lex2V", 3600)
    ans = tr.window_max("word3", 3750, 4640)
    lit = {k for k in range(4) if tr.value_at(f"word{k}", 4640) >= 25.0}
    answers = lit - {0, 1, 2}  # query rows 0, 2; token-less root 1
    if verbose:
        print(f"I object query: retro SA={retro:.1f} verb lex={vkeep:.1f} "
              f"answer max={ans:.1f} lit@end={sorted(lit)}")
    check("I root assembly relit by readout", retro >= 90, f"({retro:.1f})")
    check("I doubly-fed verb survives sweep", vkeep >= 90, f"({vkeep:.1f})")
    check("I answer set exact", answers == {3}, f"({sorted(answers)})")

    # ---- J: established winner holds against a mid-feed newcomer ----------
    # dep0 is alone when the feed opens at 600; dep2's assembly arms ~205 ms
    # into the feed (fresher, lower adaptation). The established rivalry
    # winner must keep the relay and complete its commit; the newcomer must
    # neither latch a cell nor stall the commit in progress.
    pulses = base_words(1) + commit(600, 300)
    pulses += word_ops(2, 600, "N") + create("D", "N", 770)
    tr = run_pulses(arch, pulses, 1500, rec)
    t_wm = tr.first_crossing("wm10", 50, after=600)
    wm_est = tr.value_at("wm10", 1450)
    wm_new = tr.value_at("wm12", 1450)
    sa_new = tr.value_at("saD2", 1450)
    rel_new = tr.window_max("relD2", 800, 900)
    if verbose:
        print(f"J mid-feed newcomer: est wm latency "
              f"{None if t_wm is None else t_wm - 600:.0f} ms, est wm={wm_est:.1f} "
              f"newcomer wm={wm_new:.2f} newcomer SA={sa_new:.1f} "
              f"newcomer relay max={rel_new:.1f}")
    check("J established commit completes", t_wm is not None and wm_est >= 90,
          f"(wm {wm_est:.1f})")
    check("J newcomer never latches", wm_new < 5, f"({wm_new:.2f})")
    check("J newcomer relay suppressed", rel_new < 25, f"({rel_new:.1f})")
    check("J newcomer assembly survives", sa_new >= 50, f"({sa_new:.1f})")
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sweep", action="store_true")
    ap.add_argument("--probe", type=float, default=300.0)
    args = ap.parse_args()
    base = load_config()

    if not args.sweep:
        t0 = time.perf_counter()
        out = run_scenarios(base, verbose=True, commit_probe=args.probe)
        print(f"overall: {'PASS' if out['pass'] else 'FAIL'} "
              f"({time.perf_counter() - t0:.1f}s)")
        sys.exit(0 if out["pass"] else 1)

    results = []
    for cc in (0.9, 1.1, 1.3):
        for boost in (0.24, 0.27, 0.30):
            for kick in (0.60, 0.66, 0.72):
                for mc in (0.8, 1.0):
                    w = replace(base.weights, compete_cross=cc,
                                compete_boost=boost, relay_to_compete=kick,
                                mark_clear=mc)
                    cfg = replace(base, weights=w)
                    out = run_scenarios(cfg, verbose=False,
                                        commit_probe=args.probe)
                    tag = f"cc={cc} boost={boost} kick={kick} mc={mc}"
                    results.append((out["pass"], tag, out))
                    print(f"{'PASS' if out['pass'] else 'FAIL':4} {tag} "
                          f"commit={out['commit_latency']} "
                          f"contest={out['contest_latency']} "
                          f"fails={','.join(out['notes']) or '-'}")
    good = [r for r in results if r[0]]
    print(f"\n{len(good)}/{len(results)} combos pass")


if __name__ == "__main__":
    main()
