"""Pretty-good (square-root) measurement decoder.

``Λ_i = S^{-1/2} Υ_i S^{-1/2}`` on the support of ``S = Σ Υ_i``; the kernel of
``S`` is split evenly across the candidates so the POVM is complete.
Commuting diagonal candidates use a vector representation throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

from .errors import ConsistencyError, DimensionCapError, ValidationError

SUPPORT_TOL = 1e-12
PROB_TOL = 1e-8
DENSE_ENTRIES_CAP = 2**27  # complex entries held for dense detection operators


@dataclass
class PgmDecoder:
    labels: list
    upsilons: np.ndarray  # (M, D) diagonals, or (M, D, D) matrices
    diagonal: bool
    _inv_sqrt: np.ndarray = field(repr=False)  # S^{-1/2} on the support (vector or matrix)
    _kernel: np.ndarray = field(repr=False)  # projector (vector or matrix) onto ker S

    @property
    def dim(self) -> int:
        return self.upsilons.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def povm(self) -> np.ndarray:
        """All POVM elements as dense matrices (for inspection and tests)."""
        m = len(self.labels)
        if self.diagonal:
            lam = self.upsilons * self._inv_sqrt**2 + self._kernel / m
            return np.stack([np.diag(l).astype(complex) for l in lam])
        r = self._inv_sqrt
        return np.einsum("ij,mjk,kl->mil", r, self.upsilons, r) + self._kernel / m

    def probabilities(self, rho) -> np.ndarray:
        """Born probabilities ``Tr(Λ_i ρ)``, renormalized within PROB_TOL."""
        rho = np.asarray(getattr(rho, "matrix", rho))
        m = len(self.labels)
        if self.diagonal:
            r = rho if rho.ndim == 1 else np.real(np.diagonal(rho))
            if r.shape != (self.dim,):
                raise ValidationError("shape error: state dimension does not match decoder")
            g = r * self._inv_sqrt**2
            p = self.upsilons @ g + float(self._kernel @ r) / m
        else:
            if rho.shape != (self.dim, self.dim):
                raise ValidationError("shape error: state dimension does not match decoder")
            g = self._inv_sqrt @ rho @ self._inv_sqrt
            p = np.einsum("mij,ji->m", self.upsilons, g).real
            p = p + np.real(np.trace(self._kernel @ rho)) / m
        p = np.where(p < 0, np.where(p > -PROB_TOL, 0.0, p), p)
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL or p.min() < 0:
            raise ConsistencyError(f"POVM inconsistency: probabilities sum to {total!r}")
        return p / total


def _is_diagonal(a: np.ndarray) -> bool:
    off = a - np.einsum("...ii->...i", a)[..., None] * np.eye(a.shape[-1])
    return bool(np.abs(off).max(initial=0.0) <= 1e-14)


def build_pgm(candidates: Sequence[tuple[Hashable, object]]) -> PgmDecoder:
    """Square-root measurement for ``(label, state)`` candidates.

    States may be matrices (or :class:`DensityOperator`) of a common size, or
    1-D arrays taken as diagonals of commuting operators.
    """
    if len(candidates) == 0:
        raise ValidationError("no candidates")
    labels = [c[0] for c in candidates]
    mats = [np.asarray(getattr(c[1], "matrix", c[1])) for c in candidates]
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise ValidationError("shape error: candidate states differ in dimension")
    ups = np.stack(mats)
    if ups.ndim == 2:
        return _diagonal_pgm(labels, ups.real.astype(float))
    if _is_diagonal(ups):
        return _diagonal_pgm(labels, np.real(np.einsum("mii->mi", ups)).astype(float))
    return dense_pgm(labels, ups.astype(complex))


def _diagonal_pgm(labels: list, ups: np.ndarray) -> PgmDecoder:
    s = ups.sum(axis=0)
    supp = s > SUPPORT_TOL
    inv_sqrt = np.where(supp, 1.0 / np.sqrt(np.where(supp, s, 1.0)), 0.0)
    return PgmDecoder(labels, ups, True, inv_sqrt, (~supp).astype(float))


def dense_pgm(labels: list, ups: np.ndarray) -> PgmDecoder:
    if ups.size > DENSE_ENTRIES_CAP:
        raise DimensionCapError(f"dimension cap exceeded: {ups.shape[0]} dense operators of size {ups.shape[1]}")
    s = ups.sum(axis=0)
    ev, vec = np.linalg.eigh((s + s.conj().T) / 2)
    supp = ev > SUPPORT_TOL
    inv = np.where(supp, 1.0 / np.sqrt(np.where(supp, ev, 1.0)), 0.0)
    inv_sqrt = (vec * inv) @ vec.conj().T
    kernel = (vec * (~supp)) @ vec.conj().T
    return PgmDecoder(labels, ups, False, inv_sqrt, kernel)


def measure(decoder: PgmDecoder, rho, rng: np.random.Generator):
    """Sample a label by the Born rule."""
    p = decoder.probabilities(rho)
    return decoder.labels[int(rng.choice(len(p), p=p))]


def error_probability(decoder: PgmDecoder, states: Sequence, priors: Optional[Sequence[float]] = None) -> float:
    """Average error when candidate ``i`` is sent with state ``states[i]``."""
    m = len(decoder)
    priors = np.full(m, 1.0 / m) if priors is None else np.asarray(priors, float)
    ok = sum(pr * decoder.probabilities(st)[i] for i, (pr, st) in enumerate(zip(priors, states)))
    return float(1.0 - ok)
