"""Strong typical subspaces and numerical checks of their standard bounds.

A string ``s^n`` of eigen-indices is strongly delta-typical for eigenvalues
``lam`` when ``|count(k)/n - lam[k]| <= delta * lam[k]`` for every ``k``
(so indices with ``lam[k] = 0`` never appear). Indices of a degenerate
eigenvalue are pooled into one letter. Conditional projectors apply
the same test separately on the positions carrying each label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionCapError, ValidationError
from .quantum_core import check_dim, spectrum_entropy

ZERO_EIG = 1e-12
FREQ_SLACK = 1e-12
DEGEN_TOL = 1e-12
DENSE_CAP = 2**12  # largest dimension for which a dense projector matrix is built


def _eig(rho) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("shape error: expected a square density matrix")
    lam, vec = np.linalg.eigh(a)
    lam = np.where(lam < ZERO_EIG, 0.0, lam)
    return lam, vec


def _digits(n: int, d: int) -> np.ndarray:
    """``digits[i, idx]``: the i-th (most significant first) base-d digit of idx."""
    idx = np.arange(d**n)
    return np.stack([(idx // d ** (n - 1 - i)) % d for i in range(n)]).astype(np.int16)


def _kron_vectors(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1)
    for v in vectors:
        out = np.kron(out, v)
    return out


def eigen_classes(lam: np.ndarray) -> list[np.ndarray]:
    """Indices grouped by equal eigenvalue (degenerate eigenspaces form one letter)."""
    order = np.argsort(lam, kind="stable")
    groups, cur = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        if abs(lam[b] - lam[a]) <= DEGEN_TOL:
            cur.append(b)
        else:
            groups.append(np.array(cur))
            cur = [b]
    groups.append(np.array(cur))
    return groups


def typical_mask(eigs: dict, labels: Sequence, delta: float, pool_degenerate: bool = True) -> np.ndarray:
    """Boolean mask over eigen-index strings: class-wise strong typicality.

    ``eigs[a]`` holds the eigenvalues of the state attached to label ``a``;
    position ``i`` uses ``eigs[labels[i]]``. With ``pool_degenerate``,
    indices sharing an eigenvalue are counted together so the projector does
    not depend on the basis chosen inside a degenerate eigenspace; classical
    letters are never pooled.
    """
    if delta <= 0:
        raise ValidationError(f"domain error: delta must be positive, got {delta}")
    n = len(labels)
    d = len(next(iter(eigs.values())))
    check_dim(d**n, "typical subspace")
    digits = _digits(n, d)
    mask = np.ones(d**n, dtype=bool)
    labels = list(labels)
    for a, lam in eigs.items():
        pos = [i for i, l in enumerate(labels) if l == a]
        if not pos:
            continue
        m = len(pos)
        sub = digits[pos]
        lam = np.asarray(lam)
        groups = eigen_classes(lam) if pool_degenerate else [np.array([k]) for k in range(d)]
        for group in groups:
            q = float(np.sum(lam[group]))
            count = np.isin(sub, group).sum(axis=0)
            mask &= np.abs(count - m * q) <= delta * q * m + FREQ_SLACK
    return mask


@dataclass
class TypicalProjector:
    """Projector diagonal in the product basis ``bases[0] ⊗ ... ⊗ bases[n-1]``."""

    bases: list
    mask: np.ndarray
    trace_mass: float
    rank: int
    log_probs: np.ndarray  # log2 of the product eigenvalue of each typical string

    @property
    def dim(self) -> int:
        return len(self.mask)

    @property
    def matrix(self) -> np.ndarray:
        if self.dim > DENSE_CAP:
            raise DimensionCapError(f"dimension cap exceeded: dense projector of size {self.dim}")
        w = np.ones((1, 1))
        for b in self.bases:
            w = np.kron(w, b)
        return (w * self.mask) @ w.conj().T

    def diagnostics(self) -> dict:
        return {"trace_mass": self.trace_mass, "rank": self.rank}


def _projector(states: dict, labels: Sequence, delta: float) -> TypicalProjector:
    eig = {a: _eig(s) for a, s in states.items()}
    lam = {a: e[0] for a, e in eig.items()}
    mask = typical_mask(lam, labels, delta)
    with np.errstate(divide="ignore"):
        weights = _kron_vectors([lam[l] for l in labels])
        logs = np.log2(weights[mask])
    return TypicalProjector(
        bases=[eig[l][1] for l in labels],
        mask=mask,
        trace_mass=float(weights[mask].sum()),
        rank=int(mask.sum()),
        log_probs=logs,
    )


def typical_projector(rho, n: int, delta: float) -> TypicalProjector:
    """Strong delta-typical projector of ``rho`` on ``n`` copies."""
    if n < 1:
        raise ValidationError(f"domain error: n must be positive, got {n}")
    return _projector({0: rho}, [0] * n, delta)


def conditional_typical_projector(states: Sequence, xs: Sequence[int], delta: float) -> TypicalProjector:
    """Projector onto the conditionally typical subspace of ``⊗ states[x_i]``."""
    return _projector(dict(enumerate(states)), list(xs), delta)


def is_typical_sequence(p: np.ndarray, xs: Sequence[int], delta: float) -> bool:
    """Strong delta-typicality of a classical string (letters never pooled)."""
    if delta <= 0:
        raise ValidationError(f"domain error: delta must be positive, got {delta}")
    p = np.asarray(p, float)
    n = len(xs)
    counts = np.bincount(np.asarray(xs, dtype=int), minlength=len(p))
    if len(counts) > len(p):
        return False
    return bool(np.all(np.abs(counts - n * p) <= delta * p * n + FREQ_SLACK))


def _sandwich(tp: TypicalProjector, h: float, n: int, delta: float) -> dict:
    """Measured constant ``c`` of ``2^{-n(h+c delta)} Π <= Π ρ Π <= 2^{-n(h-c delta)} Π``."""
    if tp.rank == 0:
        return {"c_measured": 0.0, "min_log_prob": None, "max_log_prob": None}
    dev = np.abs(-tp.log_probs / n - h)
    return {
        "c_measured": float(dev.max() / delta),
        "min_log_prob": float(tp.log_probs.min()),
        "max_log_prob": float(tp.log_probs.max()),
    }


def _operator_check(tp: TypicalProjector, state_n: Optional[np.ndarray], lo: float, hi: float) -> Optional[bool]:
    """Dense check of ``lo Π <= Π σ Π <= hi Π`` (only for small dimensions)."""
    if state_n is None or tp.dim > 2**8:
        return None
    P = tp.matrix
    mid = P @ state_n @ P
    lo_gap = np.linalg.eigvalsh(mid - lo * P).min()
    hi_gap = np.linalg.eigvalsh(hi * P - mid).min()
    scale = max(hi, 1e-300)
    return bool(lo_gap >= -1e-9 * scale and hi_gap >= -1e-9 * scale)


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1))
    for m in mats:
        out = np.kron(out, m)
    return out


def verify_typicality_bounds(rho=None, n: int = 1, delta: float = 0.1, *,
                             cq: Optional[tuple] = None, xs: Optional[Sequence[int]] = None) -> dict:
    """Evaluate the typicality inequalities exactly at finite ``n``.

    Unconditional (``rho``): unit-trace bound, sandwich bound and dimension
    bound. Conditional (``cq=(p, states)`` with a typical ``xs``): the same
    three for the conditional projector, plus the average-state projector's
    mass on the conditional state. The constants are the measured slacks;
    ``c_theory`` is the worst case implied by the relative criterion.
    """
    if cq is None:
        lam, _ = _eig(rho)
        h = spectrum_entropy(lam)
        tp = typical_projector(rho, n, delta)
        sw = _sandwich(tp, h, n, delta)
        c = sw["c_measured"]
        state_n = _kron_all([np.asarray(getattr(rho, "matrix", rho), complex)] * n) if tp.dim <= 2**8 else None
        return {
            "n": n, "delta": delta, "entropy": h,
            "unit_trace": {"trace_mass": tp.trace_mass, "epsilon": 1.0 - tp.trace_mass},
            "sandwich": {**sw, "c_theory": h, "holds": c <= h + 1e-9,
                         "operator_check": _operator_check(tp, state_n, 2.0 ** (-n * (h + c * delta)),
                                                           2.0 ** (-n * (h - c * delta)))},
            "dimension": {"rank": tp.rank, "bound": 2.0 ** (n * (h + c * delta)),
                          "holds": tp.rank <= 2.0 ** (n * (h + c * delta)) * (1 + 1e-12)},
        }

    p, states = cq
    p = np.asarray(p, dtype=float)
    states = [np.asarray(getattr(s, "matrix", s), complex) for s in states]
    if xs is None:
        raise ValidationError("conditional bounds need a sequence xs")
    xs = [int(x) for x in xs]
    if not is_typical_sequence(p, xs, delta):
        raise ValidationError("sequence xs is not strongly typical for p")
    h_cond = float(sum(pa * spectrum_entropy(_eig(s)[0]) for pa, s in zip(p, states)))
    n = len(xs)
    tp = conditional_typical_projector(states, xs, delta)
    sw = _sandwich(tp, h_cond, n, delta)
    c = sw["c_measured"]
    state_n = _kron_all([states[x] for x in xs]) if tp.dim <= 2**8 else None

    # Average-state projector evaluated on the conditional product state.
    avg = np.einsum("a,aij->ij", p, np.asarray(states))
    avg_tp = typical_projector(avg, n, delta)
    diag = [np.einsum("ik,ij,jk->k", b.conj(), states[x], b).real for b, x in zip(avg_tp.bases, xs)]
    avg_mass = float(_kron_vectors(diag)[avg_tp.mask].sum())
    return {
        "n": n, "delta": delta, "conditional_entropy": h_cond,
        "unit_trace": {"trace_mass": tp.trace_mass, "epsilon": 1.0 - tp.trace_mass},
        "sandwich": {**sw, "c_theory": (2 + delta) * h_cond, "holds": c <= (2 + delta) * h_cond + 1e-9,
                     "operator_check": _operator_check(tp, state_n, 2.0 ** (-n * (h_cond + c * delta)),
                                                       2.0 ** (-n * (h_cond - c * delta)))},
        "dimension": {"rank": tp.rank, "bound": 2.0 ** (n * (h_cond + c * delta)),
                      "holds": tp.rank <= 2.0 ** (n * (h_cond + c * delta)) * (1 + 1e-12)},
        "average_projector": {"trace_mass": avg_mass, "epsilon": 1.0 - avg_mass},
    }
