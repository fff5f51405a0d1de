"""Desk-scale Monte-Carlo of the block-Markov cribbing scheme and the MAC packing decoder.

Codebooks are drawn i.i.d. from the ensemble, Bob decodes with a square-root
measurement, and in the decode-forward scheme Alice 2 cribs Alice 1's
codeword by exact lookup. Every trial owns PRNG substreams keyed by
``(seed, trial, ...)`` so results do not depend on trial order.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import channels as ch
from .errors import ConfigError, DimensionCapError, ShapeError, ValidationError
from .pgm import build_pgm
from .prng import make_rng
from .quantum_core import check_dim
from .typicality import conditional_typical_projector, typical_projector

DECODERS = ("pgm_direct", "pgm_projected")
MESSAGE_CAP = 2**20
PROJECTED_DIM_CAP = 2**8

# substream tags under (seed, trial)
_BOOKS, _MESSAGES, _MEASURE = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    n: int = 8
    T: int = 4
    trials: int = 200
    seed: int = 0
    delta: float = 0.1
    decoder: str = "pgm_direct"

    def __post_init__(self):
        if self.n < 1 or self.T < 2 or self.trials < 1:
            raise ConfigError("config error: need n >= 1, T >= 2 and trials >= 1")
        if not self.delta > 0:
            raise ConfigError(f"config error: delta must be positive, got {self.delta}")
        if self.decoder not in DECODERS:
            raise ConfigError(f"config error: unknown decoder {self.decoder!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("config error: seed must be a 64-bit unsigned integer")


@dataclass
class Codebook:
    n: int
    rates: tuple
    u_words: np.ndarray  # (M0, n)
    x1_words: np.ndarray  # (M0, M1, n)
    x2_words: np.ndarray  # (M0, M2, n)

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.u_words.shape[0], self.x1_words.shape[1], self.x2_words.shape[1]


def message_count(n: int, rate: float) -> int:
    """``ceil(2^{n R})`` without floating-point overshoot at integer exponents."""
    if rate < 0 or not math.isfinite(rate):
        raise ValidationError(f"domain error: rates must be finite and >= 0, got {rate}")
    e = n * rate
    if abs(e - round(e)) < 1e-9:
        e = round(e)
    if e > 20:
        raise DimensionCapError("rate too large for desk scale")
    return math.ceil(2.0**e)


def _invert(cdf: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, uniforms * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def _sample_rows(rng: np.random.Generator, probs: np.ndarray, shape: tuple) -> np.ndarray:
    return _invert(np.cumsum(probs), rng.random(shape))


def _codebook_law(ens: ch.EnsembleSpec):
    if ens.p_u is None or ens.instrument is not None:
        raise ShapeError("ensemble shape error: codebooks need p_x1 and p_x2 conditioned on U only")
    p1, p2 = np.asarray(ens.p_x1), np.asarray(ens.p_x2)
    if p1.ndim != 2 or p2.ndim != 2:
        raise ShapeError("ensemble shape error: codebooks need p_x1 and p_x2 conditioned on U only")
    return np.asarray(ens.p_u), p1, p2


def generate_codebooks(ens: ch.EnsembleSpec, n: int, rates: Sequence[float], seed: int,
                       stream: Sequence[int] = ()) -> Codebook:
    """i.i.d. codebooks ``u(m0)``, ``x1(m0, m1)``, ``x2(m0, m2)``.

    Row ``m0`` of each book has its own substream, so raising a rate only
    appends codewords and leaves the existing ones unchanged.
    """
    if n < 1:
        raise ValidationError(f"domain error: n must be positive, got {n}")
    rates = tuple(float(r) for r in rates)
    if len(rates) != 3:
        raise ValidationError("rates must be (R0, R1, R2)")
    m0, m1, m2 = (message_count(n, r) for r in rates)
    if m0 * max(m1, m2) > MESSAGE_CAP:
        raise DimensionCapError("rate too large for desk scale")
    pu, p1, p2 = _codebook_law(ens)
    stream = tuple(stream)
    u = _sample_rows(make_rng(seed, *stream, _BOOKS, 0, 0), pu, (m0, n))
    c1, c2 = np.cumsum(p1, axis=1), np.cumsum(p2, axis=1)
    x1 = np.empty((m0, m1, n), dtype=np.int64)
    x2 = np.empty((m0, m2, n), dtype=np.int64)
    for r in range(m0):
        # one uniform per letter, codeword-major, so longer books extend shorter ones
        g1 = make_rng(seed, *stream, _BOOKS, 1, r).random((m1, n))
        g2 = make_rng(seed, *stream, _BOOKS, 2, r).random((m2, n))
        for i in range(n):
            x1[r, :, i] = _invert(c1[u[r, i]], g1[:, i])
            x2[r, :, i] = _invert(c2[u[r, i]], g2[:, i])
    return Codebook(n, rates, u, x1, x2)


# --- product output states -------------------------------------------------

def _diag_table(table: np.ndarray) -> Optional[np.ndarray]:
    d = table.shape[-1]
    off = table - np.einsum("...ii->...i", table)[..., None] * np.eye(d)
    if np.abs(off).max(initial=0.0) > 1e-14:
        return None
    return np.real(np.einsum("...ii->...i", table))


def product_states(table: np.ndarray, a1: np.ndarray, a2: np.ndarray, diagonal: bool) -> np.ndarray:
    """``⊗_i table[a1[m, i], a2[m, i]]`` for every row ``m``; diagonals if ``diagonal``."""
    m, n = a1.shape
    if diagonal:
        out = table[a1[:, 0], a2[:, 0]]
        for i in range(1, n):
            out = np.einsum("mi,mj->mij", out, table[a1[:, i], a2[:, i]]).reshape(m, -1)
        return out
    out = table[a1[:, 0], a2[:, 0]]
    for i in range(1, n):
        nxt = table[a1[:, i], a2[:, i]]
        k, d = out.shape[-1], nxt.shape[-1]
        out = np.einsum("mij,mkl->mikjl", out, nxt).reshape(m, k * d, k * d)
    return out


class _Outputs:
    """Channel output table with the decoder-specific detection operators."""

    def __init__(self, table: np.ndarray, ens: ch.EnsembleSpec, n: int, cfg: SimConfig):
        self.table = np.asarray(table, dtype=complex)
        if self.table.ndim != 4:
            raise ShapeError("channel table must have shape (X1, X2, d_B, d_B)")
        self.d = self.table.shape[-1]
        check_dim(self.d**n, "output space")
        self.n = n
        self.cfg = cfg
        diag = _diag_table(self.table)
        self.projected = cfg.decoder == "pgm_projected"
        self.diagonal = diag is not None and not self.projected
        self.dtable = diag if self.diagonal else self.table
        if self.projected:
            if self.d**n > PROJECTED_DIM_CAP:
                raise DimensionCapError(f"dimension cap exceeded: projected decoder needs d_B^n <= {PROJECTED_DIM_CAP}")
            self._prepare_projectors(ens)

    def states(self, a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
        return product_states(self.dtable, a1, a2, self.diagonal)

    def detectors(self, u: np.ndarray, a1: np.ndarray, a2: np.ndarray) -> np.ndarray:
        if not self.projected:
            return self.states(a1, a2)
        return np.stack([self._upsilon(tuple(uu), tuple(x1), tuple(x2)) for uu, x1, x2 in zip(u, a1, a2)])

    # Typical-projector sandwich Π Π_u Π_ux1 Π_ux2 Π_ux1x2 Π_ux2 Π_ux1 Π_u Π.
    def _prepare_projectors(self, ens: ch.EnsembleSpec):
        pu, p1, p2 = _codebook_law(ens)
        t = self.table
        self.rho_u = np.einsum("ua,ub,abij->uij", p1, p2, t)
        self.rho_ux1 = np.einsum("ub,abij->uaij", p2, t)
        self.rho_ux2 = np.einsum("ua,abij->ubij", p1, t)
        avg = np.einsum("u,uij->ij", pu, self.rho_u)
        self.pi = typical_projector(avg, self.n, self.cfg.delta).matrix
        self._cache = {}

    def _cond(self, key, states_by_label: dict, labels: list) -> np.ndarray:
        k = (key, tuple(labels))
        if k not in self._cache:
            used = {l: states_by_label[l] for l in set(labels)}
            keys = list(used)
            idx = [keys.index(l) for l in labels]
            self._cache[k] = conditional_typical_projector([used[l] for l in keys], idx, self.cfg.delta).matrix
        return self._cache[k]

    def _upsilon(self, u, x1, x2) -> np.ndarray:
        nx1, nx2 = self.table.shape[:2]
        p_u = self._cond("u", {a: self.rho_u[a] for a in set(u)}, list(u))
        p_ux1 = self._cond("ux1", {(a, b): self.rho_ux1[a, b] for a, b in zip(u, x1)}, list(zip(u, x1)))
        p_ux2 = self._cond("ux2", {(a, b): self.rho_ux2[a, b] for a, b in zip(u, x2)}, list(zip(u, x2)))
        p_all = self._cond("ux1x2", {(a, b, c): self.table[b, c] for a, b, c in zip(u, x1, x2)},
                           list(zip(u, x1, x2)))
        inner = p_u @ p_ux1 @ p_ux2 @ p_all @ p_ux2 @ p_ux1 @ p_u
        return self.pi @ inner @ self.pi


def _decode(outputs: _Outputs, labels: list, u, a1, a2, rho, rng) -> object:
    dec = build_pgm(list(zip(labels, outputs.detectors(u, a1, a2))))
    p = dec.probabilities(rho)
    return labels[int(rng.choice(len(p), p=p))]


# --- decode-forward with noiseless cribbing ----------------------------------

def _crib_lookup(book_row: np.ndarray, word: np.ndarray) -> list[int]:
    return [int(i) for i in np.nonzero((book_row == word).all(axis=1))[0]]


def simulate_df_noiseless(spec: ch.CqMacSpec, ens: ch.EnsembleSpec, rates: Sequence[float],
                          cfg: SimConfig = SimConfig()) -> dict:
    """Block-Markov decode-forward over ``cfg.T`` blocks with backward decoding.

    ``rates = (R1, R2)``; the cooperative index ``m0`` carries Alice 1's
    previous message, so its codebook rate equals ``R1``. Messages of block
    0 and block T are fixed to index 0. A trial fails if Alice 2's lookup
    is ambiguous or wrong, or if Bob misdecodes any message.
    """
    if not isinstance(spec, ch.CqMacSpec) or not (isinstance(spec.cribbing, str) and spec.cribbing == "noiseless"):
        raise ShapeError("ensemble shape error: decode-forward simulation needs a cq channel with noiseless cribbing")
    r1, r2 = (float(r) for r in rates)
    n, T = cfg.n, cfg.T
    started = time.perf_counter()
    check_dim(spec.d_b**n, "output space")
    outputs = _Outputs(spec.table, ens, n, cfg)
    block_err = np.zeros(T, dtype=int)
    crib_err = np.zeros(T, dtype=int)
    failed = 0
    for trial in range(cfg.trials):
        book = generate_codebooks(ens, n, (r1, r1, r2), cfg.seed, (trial,))
        M0, M1, M2 = book.counts
        mrng = make_rng(cfg.seed, trial, _MESSAGES)
        m1 = np.zeros(T + 1, dtype=int)
        m2 = np.zeros(T + 1, dtype=int)
        m1[1:T] = mrng.integers(0, M1, T - 1)
        m2[1:T] = mrng.integers(0, M2, T - 1)
        # transmission with cribbing
        crib = np.zeros(T + 1, dtype=int)
        sent = []
        bad = False
        for j in range(1, T + 1):
            w1 = book.x1_words[m1[j - 1], m1[j]]
            w2 = book.x2_words[crib[j - 1], m2[j]]
            sent.append((w1, w2))
            if j < T:
                hits = _crib_lookup(book.x1_words[crib[j - 1]], w1)
                crib[j] = hits[0] if hits else 0
                if len(hits) != 1 or crib[j] != m1[j]:
                    crib_err[j - 1] += 1
                    bad = True
        # backward decoding
        drng = make_rng(cfg.seed, trial, _MEASURE)
        m1_hat = 0  # m1(T) is fixed
        for j in range(T, 0, -1):
            w1, w2 = sent[j - 1]
            rho = outputs.states(w1[None], w2[None])[0]
            m0s = [0] if j == 1 else range(M0)
            m2s = [0] if j == T else range(M2)
            labels = [(a, b) for a in m0s for b in m2s]
            u = np.stack([book.u_words[a] for a, _ in labels])
            a1 = np.stack([book.x1_words[a, m1_hat] for a, _ in labels])
            a2 = np.stack([book.x2_words[a, b] for a, b in labels])
            m0_hat, m2_hat = _decode(outputs, labels, u, a1, a2, rho, drng)
            wrong = (j > 1 and m0_hat != m1[j - 1]) or (j < T and m2_hat != m2[j])
            if wrong:
                block_err[j - 1] += 1
                bad = True
            m1_hat = m0_hat
        failed += bad
    return {
        "config": {**asdict(cfg), "rates": [r1, r2], "scheme": "decode_forward_noiseless"},
        "empirical_error": failed / cfg.trials,
        "per_block_errors": [int(x) for x in block_err],
        "crib_errors": [int(x) for x in crib_err],
        "wall_time_ms": (time.perf_counter() - started) * 1e3,
    }


# --- single-block packing ----------------------------------------------------

def simulate_packing_single_block(outputs_table: np.ndarray, ens: ch.EnsembleSpec, n: int,
                                  rates: Sequence[float], cfg: SimConfig = SimConfig()) -> dict:
    """Average success of the joint (m0, m1, m2) square-root decoder.

    Each trial draws a fresh codebook and computes the exact Born-rule
    success averaged over uniform messages, so only codebooks are sampled.
    """
    started = time.perf_counter()
    table = np.asarray(outputs_table)
    outputs = _Outputs(table, ens, n, cfg)
    rates = tuple(float(r) for r in rates)
    per_trial = []
    for trial in range(cfg.trials):
        book = generate_codebooks(ens, n, rates, cfg.seed, (trial,))
        M0, M1, M2 = book.counts
        labels = [(a, b, c) for a in range(M0) for b in range(M1) for c in range(M2)]
        if len(labels) > MESSAGE_CAP:
            raise DimensionCapError("rate too large for desk scale")
        u = np.stack([book.u_words[a] for a, _, _ in labels])
        a1 = np.stack([book.x1_words[a, b] for a, b, _ in labels])
        a2 = np.stack([book.x2_words[a, c] for a, _, c in labels])
        dec = build_pgm(list(zip(labels, outputs.detectors(u, a1, a2))))
        states = outputs.states(a1, a2)
        ok = np.mean([dec.probabilities(st)[i] for i, st in enumerate(states)])
        per_trial.append(float(ok))
    success = float(np.mean(per_trial))
    return {
        "config": {**asdict(cfg), "n": n, "rates": list(rates), "scheme": "packing_single_block"},
        "success_probability": success,
        "empirical_error": 1.0 - success,
        "per_trial_success": per_trial,
        "wall_time_ms": (time.perf_counter() - started) * 1e3,
    }
