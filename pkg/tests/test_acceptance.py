"""Acceptance suite: one PASS/FAIL line per primary criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the summary)
or ``python tests/test_acceptance.py``.
"""

import itertools
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qmac import channels as ch
from qmac import optimizer as op
from qmac import regions as rg
from qmac import simulator as sim
from qmac.pgm import build_pgm, error_probability
from qmac.quantum_core import KrausChannel
from qmac.typicality import verify_typicality_bounds

DATA = Path(__file__).parent / "data"
RESULTS: dict = {}


def record(name: str, ok: bool, detail: str) -> None:
    RESULTS[name] = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(RESULTS[name])


# --- independent oracles ---------------------------------------------------------

def g_oracle(x: float) -> float:
    if x == 0:
        return 0.0
    return (x + 1) * math.log(x + 1, 2) - x * math.log(x, 2)


def classical_mi(p, a, b, c):
    def h(axes):
        drop = tuple(i for i in range(p.ndim) if i not in axes)
        m = p.sum(axis=drop).ravel()
        m = m[m > 0]
        return float(-(m * np.log2(m)).sum())
    a, b, c = set(a), set(b), set(c)
    return h(a | c) + h(b | c) - h(c) - h(a | b | c)


def helstrom(r0, r1):
    return 0.5 * (1 - np.abs(np.linalg.eigvalsh(0.5 * (r0 - r1))).sum())


def enumerate_typical(lams_by_pos, delta):
    """Brute-force strong typicality over eigen-index strings.

    ``lams_by_pos[i]`` is ``(label, eigenvalues)`` for position i; counts are
    checked per label. Returns (mass, rank, log2-probabilities).
    """
    n = len(lams_by_pos)
    d = len(lams_by_pos[0][1])
    labels = sorted({l for l, _ in lams_by_pos})
    mass, rank, logs = 0.0, 0, []
    for s in itertools.product(range(d), repeat=n):
        ok = True
        for lab in labels:
            pos = [i for i, (l, _) in enumerate(lams_by_pos) if l == lab]
            lam = lams_by_pos[pos[0]][1]
            for k in range(d):
                cnt = sum(1 for i in pos if s[i] == k)
                if abs(cnt - len(pos) * lam[k]) > delta * lam[k] * len(pos) + 1e-12:
                    ok = False
        if ok:
            pr = float(np.prod([lams_by_pos[i][1][s[i]] for i in range(n)]))
            mass += pr
            rank += 1
            logs.append(math.log2(pr))
    return mass, rank, logs


# --- criteria ----------------------------------------------------------------------

def test_bosonic_formulas():
    t0 = time.perf_counter()
    p = ch.BosonicParams(0.5, 0.5, 1.0, 1.0, 0.0)
    crib, none = rg.bosonic_region(p, True), rg.bosonic_region(p, False)
    elapsed = time.perf_counter() - t0
    oracle = {"b1": g_oracle(0.5), "b2": g_oracle(0.5), "b12": g_oracle(0.75), "b1_none": g_oracle(0.25)}
    got = {"b1": crib.b1, "b2": crib.b2, "b12": crib.b12, "b1_none": none.b1}
    listed = {"b1": 1.377444, "b2": 1.377444, "b12": 1.724149, "b1_none": 0.905639}
    err = max(abs(got[k] - oracle[k]) for k in got)
    slip = {k: abs(listed[k] - oracle[k]) for k in listed if abs(listed[k] - oracle[k]) > 1e-6}
    ok = err <= 1e-6 and elapsed < 1.0
    note = f"; listed literal differs from oracle for {sorted(slip)} by {max(slip.values()):.2e}" if slip else ""
    record("bosonic formulas", ok,
           f"crib=({got['b1']:.6f}, {got['b2']:.6f}, {got['b12']:.6f}) b1_none={got['b1_none']:.6f} "
           f"max|tool-oracle|={err:.1e} time={elapsed * 1e3:.2f}ms{note}")
    assert ok


def test_bosonic_gain_grid(tmp_path):
    rows, fails = 0, []
    for e1, e2, nc in itertools.product((0.5, 0.7, 0.9), (0.3, 0.5), (0.0, 0.1)):
        out = tmp_path / f"grid_{e1}_{e2}_{nc}.csv"
        subprocess.run([sys.executable, "-m", "qmac.cli", "bosonic", "--eta1", str(e1), "--eta2", str(e2),
                        "--na1", "1", "--na2", "1", "--nc", str(nc), "--sweep", "21", "--output", str(out)], check=True)
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "lambda,r1_crib,r2_crib,r1_none,r2_none"
        data = np.array([[float(v) for v in l.split(",")] for l in lines[1:]])
        rows += len(data)
        if not data[:, 1].max() > data[:, 3].max():
            fails.append((e1, e2, nc))
    ok = not fails
    record("bosonic cribbing gain", ok, f"12 grid points, {rows} CSV rows, max r1 crib > none failed at {fails or 'none'}")
    assert ok


def test_classical_consistency():
    t0 = time.perf_counter()
    r = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(50):
        w = r.dirichlet(np.ones(2), size=(2, 2))
        spec = ch.CqMacSpec(np.einsum("aby,yz->abyz", w, np.eye(2)), "none")
        ens = ch.EnsembleSpec(p_u=r.dirichlet(np.ones(2)), p_x1=r.dirichlet(np.ones(2), size=2),
                              p_x2=r.dirichlet(np.ones(2), size=2))
        b = rg.eval_region("none", spec, ens)
        P = np.einsum("u,ua,ub,aby->uaby", ens.p_u, ens.p_x1, ens.p_x2, w)
        want = (classical_mi(P, {1}, {3}, {0, 2}), classical_mi(P, {2}, {3}, {0, 1}), classical_mi(P, {1, 2}, {3}, {0}))
        worst = max(worst, *(abs(x - y) for x, y in zip((b.b1, b.b2, b.b12), want)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    record("classical consistency", ok, f"50 instances, max deviation {worst:.1e}, time {elapsed:.2f}s")
    assert ok


def test_pdf_cutset_coincidence():
    t0 = time.perf_counter()
    r = np.random.default_rng(2024)

    def rand_state():
        a = r.normal(size=(2, 2)) + 1j * r.normal(size=(2, 2))
        m = a @ a.conj().T
        return m / np.trace(m).real

    cfg = op.OptimizerConfig(restarts=4, seed=7)
    worst, where = 0.0, None
    for c in range(10):
        tab = np.array([[rand_state() for _ in range(2)] for _ in range(3)])
        g = r.integers(0, 2, 3)
        spec = ch.CqMacSpec(tab, np.eye(2)[g])
        for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
            a = op.maximize_weighted_rate("pdf_sc", spec, lam, cfg).objective
            b = op.maximize_weighted_rate("cutset", spec, lam, cfg).objective
            if abs(a - b) > worst:
                worst, where = abs(a - b), (c, lam)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and elapsed < 300
    record("pdf-cutset coincidence", ok, f"10 channels x 5 weights, max |pdf - cutset| = {worst:.1e} at {where}, "
                                        f"time {elapsed:.0f}s")
    assert ok


def test_pgm_helstrom():
    worst = 0.0
    for s2 in (0.0, 0.25, 0.5, 0.9):
        a = np.array([1.0, 0.0])
        b = np.array([math.sqrt(s2), math.sqrt(1 - s2)])
        r0, r1 = np.outer(a, a), np.outer(b, b)
        pe = error_probability(build_pgm([(0, r0), (1, r1)]), [r0, r1])
        worst = max(worst, abs(pe - helstrom(r0, r1)), abs(pe - (1 - math.sqrt(1 - s2)) / 2))
    ok = worst <= 1e-9
    record("PGM optimality", ok, f"s^2 in {{0, .25, .5, .9}}, max |pgm - helstrom| = {worst:.1e}")
    assert ok


def test_typicality_suite():
    t0 = time.perf_counter()
    rho = np.diag([0.75, 0.25])
    h = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
    th = 0.6
    v = np.array([math.cos(th), math.sin(th)])
    s0 = np.diag([0.85, 0.15])
    s1 = 0.7 * np.outer(v, v) + 0.3 * np.eye(2) / 2
    p = np.array([0.5, 0.5])
    eig = {0: np.linalg.eigvalsh(s0), 1: np.linalg.eigvalsh(s1)}
    h_cond = sum(pa * -sum(l * math.log2(l) for l in eig[a] if l > 0) for a, pa in enumerate(p))
    avg = 0.5 * s0 + 0.5 * s1
    ev, vec = np.linalg.eigh(avg)
    problems, eps = [], []
    for n, delta in itertools.product((6, 8, 10), (0.1, 0.2)):
        rep = verify_typicality_bounds(rho, n, delta)
        mass, rank, logs = enumerate_typical([(0, [0.75, 0.25])] * n, delta)
        c = max((abs(-l / n - h) / delta for l in logs), default=0.0)
        if abs(rep["unit_trace"]["trace_mass"] - mass) > 1e-12 or rep["dimension"]["rank"] != rank:
            problems.append(("unconditional enumeration", n, delta))
        if not (rep["sandwich"]["holds"] and abs(rep["sandwich"]["c_measured"] - c) < 1e-9
                and rank <= 2 ** (n * (h + c * delta)) and rep["dimension"]["holds"]):
            problems.append(("unconditional bounds", n, delta))
        if rep["sandwich"]["operator_check"] is False:
            problems.append(("operator sandwich", n, delta))
        xs = [0, 1] * (n // 2)
        crep = verify_typicality_bounds(cq=(p, [s0, s1]), xs=xs, delta=delta)
        cmass, crank, clogs = enumerate_typical([(x, eig[x]) for x in xs], delta)
        cc = max((abs(-l / n - h_cond) / delta for l in clogs), default=0.0)
        # average-state projector applied to the conditional product state
        diag = {x: np.einsum("ik,ij,jk->k", vec, [s0, s1][x], vec) for x in (0, 1)}
        amass = 0.0
        for s in itertools.product(range(2), repeat=n):
            cnt = np.bincount(s, minlength=2)
            if all(abs(cnt[k] - n * ev[k]) <= delta * ev[k] * n + 1e-12 for k in range(2)):
                amass += float(np.prod([diag[xs[i]][s[i]] for i in range(n)]))
        if abs(crep["unit_trace"]["trace_mass"] - cmass) > 1e-12 or crep["dimension"]["rank"] != crank:
            problems.append(("conditional enumeration", n, delta))
        if not (crep["sandwich"]["holds"] and abs(crep["sandwich"]["c_measured"] - cc) < 1e-9
                and crep["dimension"]["holds"]) or crep["sandwich"]["operator_check"] is False:
            problems.append(("conditional bounds", n, delta))
        if abs(crep["average_projector"]["trace_mass"] - amass) > 1e-12:
            problems.append(("average projector", n, delta))
        eps.append((n, delta, round(1 - mass, 4), round(1 - cmass, 4), round(1 - amass, 4)))
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 30
    record("typicality suite", ok, f"n in {{6,8,10}} x delta in {{0.1,0.2}}, enumeration agrees, bounds hold; "
                                   f"issues={problems or 'none'}; (n, delta, eps, eps_cond, eps_avg)={eps}; "
                                   f"time {elapsed:.1f}s")
    assert ok


def test_decode_forward_simulation():
    t = np.zeros((2, 2, 2, 2))
    for a in range(2):
        for b in range(2):
            t[a, b, a ^ b, a ^ b] = 1.0
    spec = ch.CqMacSpec(t, "noiseless")
    ens = ch.EnsembleSpec(p_u=[1.0], p_x1=[[0.5, 0.5]], p_x2=[[0.5, 0.5]])
    errs = {n: sim.simulate_df_noiseless(spec, ens, (0.4, 0.4), sim.SimConfig(n=n, T=4, trials=200, seed=2024))
            ["empirical_error"] for n in (4, 6, 8)}
    outside = sim.simulate_df_noiseless(spec, ens, (0.9, 0.9), sim.SimConfig(n=6, T=4, trials=200, seed=2024))
    monotone = errs[4] > errs[6] > errs[8]
    ok = monotone and errs[8] < 0.2 and outside["empirical_error"] > 0.5
    record("decode-forward simulation", ok,
           f"error at n=4,6,8: {errs[4]:.3f}, {errs[6]:.3f}, {errs[8]:.3f} (decreasing: {monotone}; "
           f"below 0.2 at n=8: {errs[8] < 0.2}); rates (0.9, 0.9) at n=6: {outside['empirical_error']:.3f}")
    assert ok


def test_robustness():
    spec = ch.CqMacSpec(np.array([[np.diag([1.0, 0.0])], [np.diag([0.0, 1.0])]]), "noiseless")
    good = ch.check_robust_cribbing(ch.cq_to_cribbing_mac(spec))
    ident = KrausChannel.identity(2)
    bad = ch.check_robust_cribbing(ch.CribbingMac(2, 2, 1, 1, 2, ident, ident))
    ok = good.certified and good.cmi_values[0] < 1e-9 and not bad.certified and abs(bad.cmi_values[0] - 2.0) <= 1e-6
    record("robust cribbing test", ok, f"noiseless embedding CMI={good.cmi_values[0]:.1e} (certified={good.certified}); "
                                       f"|H_E|=1 CMI={bad.cmi_values[0]:.9f} (certified={bad.certified})")
    assert ok


def test_cli_determinism(tmp_path):
    d = str(DATA)
    cmds = {
        "region-eval": ["region-eval", f"{d}/xor_cq.json", "--kind", "none", "--ensemble", f"{d}/uniform_ens.json"],
        "bosonic": ["bosonic", "--eta1", "0.7", "--eta2", "0.3", "--na1", "1", "--na2", "1", "--nc", "0.1"],
        "optimize": ["optimize", f"{d}/bsc_cq.json", "--kind", "none", "--restarts", "2", "--seed", "3",
                     "--json-output", str(tmp_path / "opt.json")],
        "simulate": ["simulate", f"{d}/xor_cq.json", "--ensemble", f"{d}/uniform_ens.json", "--n", "6",
                     "--trials", "30", "--rates", "0.4,0.4", "--seed", "9"],
        "check-robust": ["check-robust", f"{d}/copy_kraus.json"],
    }
    differing = []
    for name, args in cmds.items():
        out = tmp_path / f"{name}.out"
        blobs = []
        for _ in range(2):
            subprocess.run([sys.executable, "-m", "qmac.cli", *args, "--output", str(out)], check=True)
            extra = (tmp_path / "opt.json").read_bytes() if name == "optimize" else b""
            blobs.append(out.read_bytes() + extra)
        if blobs[0] != blobs[1]:
            differing.append(name)
    ok = not differing
    record("CLI determinism", ok, f"{len(cmds)} commands run twice, byte-identical outputs; differing={differing or 'none'}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
