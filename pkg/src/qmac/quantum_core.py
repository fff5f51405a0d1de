"""Dense linear algebra for finite-dimensional quantum information.

States, Kraus channels, instruments and joint classical-quantum states,
together with the entropy functionals every rate region is built from.
All logarithms are base 2.
"""

from __future__ import annotations

import os
import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConsistencyError,
    DimensionCapError,
    InvalidChannelError,
    InvalidInstrumentError,
    InvalidStateError,
    RegisterError,
)

ATOL = 1e-9
NEG_CLAMP = 1e-8
DEFAULT_DIM_CAP = 2**20


def dim_cap() -> int:
    """Largest operator dimension we are willing to build (``QMAC_DIM_CAP``)."""
    raw = os.environ.get("QMAC_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise DimensionCapError(f"QMAC_DIM_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise DimensionCapError("QMAC_DIM_CAP must be positive")
    return cap


def check_dim(dim: int, what: str = "operator") -> None:
    cap = dim_cap()
    if dim > cap:
        raise DimensionCapError(f"dimension cap exceeded: {what} needs dimension {dim} > {cap}")


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {a.shape}")
    return a


def _check_state_matrix(a: np.ndarray, tol: float = ATOL) -> None:
    if np.max(np.abs(a - a.conj().T), initial=0.0) > tol:
        raise InvalidStateError("invalid state: matrix is not Hermitian")
    tr = np.trace(a)
    if abs(tr - 1.0) > tol:
        raise InvalidStateError(f"invalid state: trace is {tr.real:.12g}, not 1")
    lo = np.linalg.eigvalsh(a)[0] if a.shape[0] else 0.0
    if lo < -tol:
        raise InvalidStateError(f"invalid state: negative eigenvalue {lo:.3e}")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.matrix).copy()
        _check_state_matrix(a)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vec) -> DensityOperator:
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def basis(cls, dim: int, index: int) -> DensityOperator:
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityOperator:
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def diag(cls, probs) -> DensityOperator:
        return cls(np.diag(np.asarray(probs, dtype=complex)))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _raw(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.matrix
    return _as_matrix(rho)


def tensor(*ops) -> DensityOperator:
    """Kronecker product of density operators, left to right."""
    if not ops:
        raise InvalidStateError("tensor of nothing")
    dim = int(np.prod([_raw(o).shape[0] for o in ops]))
    check_dim(dim, "tensor product")
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, _raw(o))
    return DensityOperator(out)


def ptrace(mats: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace on raw (possibly batched) matrices.

    ``mats`` has shape ``(..., D, D)`` with ``D = prod(dims)``. Kept registers
    stay in their original order.
    """
    dims = [int(d) for d in dims]
    keep = sorted(set(keep))
    n = len(dims)
    if keep == list(range(n)):
        return mats
    batch = mats.shape[:-2]
    t = mats.reshape(batch + tuple(dims) + tuple(dims))
    letters = string.ascii_letters
    rows = letters[:n]
    cols = "".join(letters[n + i] if i in keep else letters[i] for i in range(n))
    out = "".join(letters[i] for i in keep) + "".join(letters[n + i] for i in keep)
    r = np.einsum(f"...{rows}{cols}->...{out}", t)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return r.reshape(batch + (dk, dk))


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> DensityOperator:
    """Reduced state on the registers listed in ``keep``."""
    a = _raw(rho)
    dims = list(dims)
    keep = set(keep)
    if int(np.prod(dims)) != a.shape[0]:
        raise RegisterError(f"register layout error: dims {dims} do not multiply to {a.shape[0]}")
    if not keep:
        raise RegisterError("register layout error: keep set is empty")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise RegisterError(f"register layout error: keep {sorted(keep)} out of range")
    return DensityOperator(ptrace(a, dims, keep))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """CPTP map given by Kraus operators of shape ``(out_dim, in_dim)``."""

    in_dim: int
    out_dim: int
    kraus_ops: tuple = field(repr=False)

    def __post_init__(self):
        ops = np.asarray([np.asarray(k, dtype=complex) for k in self.kraus_ops])
        if ops.ndim != 3 or ops.shape[1:] != (self.out_dim, self.in_dim):
            raise InvalidChannelError(
                f"invalid channel: Kraus operators must have shape ({self.out_dim}, {self.in_dim})"
            )
        gram = np.einsum("kji,kjl->il", ops.conj(), ops)
        err = np.max(np.abs(gram - np.eye(self.in_dim)))
        if err > ATOL:
            raise InvalidChannelError(f"invalid channel: not trace preserving (deviation {err:.3e})")
        ops.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)

    @classmethod
    def identity(cls, dim: int) -> KrausChannel:
        return cls(dim, dim, (np.eye(dim),))

    @classmethod
    def from_isometry(cls, v) -> KrausChannel:
        v = np.asarray(v, dtype=complex)
        return cls(v.shape[1], v.shape[0], (v,))

    def apply_raw(self, mats: np.ndarray) -> np.ndarray:
        """Action on raw matrices, batched over leading axes."""
        k = self.kraus_ops
        return np.einsum("kab,...bc,kdc->...ad", k, mats, k.conj())

    def compose(self, first: KrausChannel) -> KrausChannel:
        """The channel ``self ∘ first``."""
        if first.out_dim != self.in_dim:
            raise InvalidChannelError("invalid channel: composition dimension mismatch")
        ops = [a @ b for a in self.kraus_ops for b in first.kraus_ops]
        return KrausChannel(first.in_dim, self.out_dim, tuple(ops))

    def tensor(self, other: KrausChannel) -> KrausChannel:
        ops = [np.kron(a, b) for a in self.kraus_ops for b in other.kraus_ops]
        return KrausChannel(self.in_dim * other.in_dim, self.out_dim * other.out_dim, tuple(ops))


def apply_channel(ch: KrausChannel, rho) -> DensityOperator:
    a = _raw(rho)
    if a.shape[0] != ch.in_dim:
        raise InvalidChannelError(f"invalid channel: input dimension {a.shape[0]} != {ch.in_dim}")
    return DensityOperator(ch.apply_raw(a))


@dataclass(frozen=True, eq=False)
class Instrument:
    """Measurement with post-measurement states: outcomes ``(z, W_z)``."""

    in_dim: int
    outcomes: tuple

    def __post_init__(self):
        labels = []
        ops = []
        for label, w in self.outcomes:
            w = np.asarray(w, dtype=complex)
            if w.shape != (self.in_dim, self.in_dim):
                raise InvalidInstrumentError(
                    f"invalid instrument: operator for outcome {label!r} has shape {w.shape}"
                )
            labels.append(label)
            ops.append(w)
        if not ops:
            raise InvalidInstrumentError("invalid instrument: no outcomes")
        ops = np.asarray(ops)
        err = np.max(np.abs(np.einsum("kji,kjl->il", ops.conj(), ops) - np.eye(self.in_dim)))
        if err > ATOL:
            raise InvalidInstrumentError(f"invalid instrument: incomplete (deviation {err:.3e})")
        ops.setflags(write=False)
        object.__setattr__(self, "outcomes", tuple(zip(labels, ops)))

    @property
    def operators(self) -> np.ndarray:
        return np.asarray([w for _, w in self.outcomes])

    def __len__(self):
        return len(self.outcomes)

    @classmethod
    def trivial(cls, dim: int) -> Instrument:
        return cls(dim, ((0, np.eye(dim)),))

    @classmethod
    def projective(cls, unitary) -> Instrument:
        """Rank-one projective measurement onto the columns of ``unitary``."""
        u = np.asarray(unitary, dtype=complex)
        return cls(u.shape[0], tuple((z, np.outer(u[:, z], u[:, z].conj())) for z in range(u.shape[1])))


def spectrum_entropy(eigs: np.ndarray, tol: float = ATOL) -> float:
    """``-sum p log2 p`` over an eigenvalue array, clamping tiny negatives."""
    eigs = np.asarray(eigs, dtype=float).ravel()
    if eigs.size and eigs.min() < -tol:
        raise InvalidStateError(f"invalid state: negative eigenvalue {eigs.min():.3e}")
    p = eigs[eigs > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho) -> float:
    a = _raw(rho)
    ev = np.linalg.eigvalsh(a)
    if ev.size and ev[0] < -ATOL:
        raise InvalidStateError(f"invalid state: negative eigenvalue {ev[0]:.3e}")
    return spectrum_entropy(np.clip(ev, 0.0, 1.0))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True, eq=False)
class CqState:
    """Joint classical-quantum state.

    Classical registers are kept symbolically: ``values[k]`` is the classical
    tuple of entry ``k``, ``weights[k]`` its probability and ``states[k]`` the
    conditional density operator on the tensor product of all quantum
    registers (in declaration order).
    """

    classical: tuple
    quantum: tuple
    values: np.ndarray
    weights: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        classical = tuple((str(n), int(s)) for n, s in self.classical)
        quantum = tuple((str(n), int(d)) for n, d in self.quantum)
        names = [n for n, _ in classical] + [n for n, _ in quantum]
        if len(set(names)) != len(names):
            raise RegisterError(f"duplicate register names in {names}")
        dim = int(np.prod([d for _, d in quantum])) if quantum else 1
        check_dim(dim, "cq state")
        weights = np.asarray(self.weights, dtype=float).ravel()
        values = np.asarray(self.values, dtype=np.int64).reshape(len(weights), len(classical))
        states = np.asarray(self.states, dtype=complex).reshape(-1, dim, dim)
        k = len(weights)
        if values.shape[0] != k or states.shape[0] != k:
            raise InvalidStateError("entry arrays have inconsistent lengths")
        if np.any(weights < 0):
            raise InvalidStateError("negative entry weight")
        if abs(weights.sum() - 1.0) > ATOL:
            raise InvalidStateError(f"entry weights sum to {weights.sum():.12g}, not 1")
        for j, (name, size) in enumerate(classical):
            if k and (values[:, j].min() < 0 or values[:, j].max() >= size):
                raise RegisterError(f"classical value out of range for register {name}")
        if k and len(np.unique(values, axis=0)) != k:
            raise InvalidStateError("more than one entry per classical tuple")
        if np.max(np.abs(states - states.conj().transpose(0, 2, 1)), initial=0.0) > ATOL:
            raise InvalidStateError("invalid state: entry operator is not Hermitian")
        if k and np.max(np.abs(np.trace(states, axis1=1, axis2=2) - 1.0)) > ATOL:
            raise InvalidStateError("invalid state: entry operator trace is not 1")
        if k and np.linalg.eigvalsh(states).min() < -ATOL:
            raise InvalidStateError("invalid state: entry operator is not PSD")
        for a in (values, weights, states):
            a.setflags(write=False)
        object.__setattr__(self, "classical", classical)
        object.__setattr__(self, "quantum", quantum)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "states", states)

    @classmethod
    def from_entries(cls, classical, quantum, entries) -> CqState:
        """Build from ``(classical_tuple, weight, state)`` triples; zero weights are dropped."""
        classical = tuple(classical)
        quantum = tuple(quantum)
        dim = int(np.prod([d for _, d in quantum])) if quantum else 1
        vals, ws, sts = [], [], []
        for tup, w, st in entries:
            if w == 0:
                continue
            vals.append(tuple(tup))
            ws.append(w)
            sts.append(np.ones((1, 1)) if st is None else _raw(st))
        if not ws:
            raise InvalidStateError("cq state has no entries of positive weight")
        return cls(classical, quantum, np.asarray(vals, dtype=np.int64).reshape(len(ws), len(classical)),
                   np.asarray(ws), np.asarray(sts).reshape(len(ws), dim, dim))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.classical] + [n for n, _ in self.quantum]

    @property
    def quantum_dims(self) -> list[int]:
        return [d for _, d in self.quantum]

    @property
    def entries(self):
        return [(tuple(int(x) for x in v), float(w), s)
                for v, w, s in zip(self.values, self.weights, self.states)]

    def _split(self, registers) -> tuple[list[int], list[int]]:
        cnames = [n for n, _ in self.classical]
        qnames = [n for n, _ in self.quantum]
        ci, qi = [], []
        for r in registers:
            if r in cnames:
                ci.append(cnames.index(r))
            elif r in qnames:
                qi.append(qnames.index(r))
            else:
                raise RegisterError(f"register not found: {r!r}")
        return sorted(set(ci)), sorted(set(qi))

    def marginal(self, registers) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
        """Group entries by the named classical registers.

        Returns ``(values, weights, operators)`` where ``operators[g]`` is the
        *unnormalized* sum of ``w * reduced state`` over group ``g`` (``None``
        when no quantum register was requested).
        """
        ci, qi = self._split(registers)
        if ci:
            uniq, inv = np.unique(self.values[:, ci], axis=0, return_inverse=True)
            inv = inv.ravel()
        else:
            uniq = np.zeros((1, 0), dtype=np.int64)
            inv = np.zeros(len(self.weights), dtype=np.int64)
        w = np.zeros(len(uniq))
        np.add.at(w, inv, self.weights)
        if not qi:
            return uniq, w, None
        red = ptrace(self.states, self.quantum_dims, qi)
        ops = np.zeros((len(uniq),) + red.shape[1:], dtype=complex)
        np.add.at(ops, inv, self.weights[:, None, None] * red)
        return uniq, w, ops

    def apply(self, channel: KrausChannel, inputs: Sequence[str], output: str) -> CqState:
        """Replace quantum registers ``inputs`` by ``channel``'s output register.

        Inputs must be adjacent in declaration order; the output takes their place.
        """
        qnames = [n for n, _ in self.quantum]
        idx = [qnames.index(r) if r in qnames else -1 for r in inputs]
        if -1 in idx:
            raise RegisterError(f"register not found among {inputs}")
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise RegisterError("register layout error: channel inputs must be adjacent and in order")
        dims = self.quantum_dims
        din = int(np.prod([dims[i] for i in idx]))
        if din != channel.in_dim:
            raise InvalidChannelError(f"invalid channel: expects dimension {channel.in_dim}, registers give {din}")
        left = int(np.prod(dims[: idx[0]])) if idx[0] else 1
        right = int(np.prod(dims[idx[-1] + 1:])) if idx[-1] + 1 < len(dims) else 1
        kops = [np.kron(np.kron(np.eye(left), k), np.eye(right)) for k in channel.kraus_ops]
        kops = np.asarray(kops)
        check_dim(left * channel.out_dim * right, "cq state")
        new = np.einsum("kab,nbc,kdc->nad", kops, self.states, kops.conj())
        quantum = self.quantum[: idx[0]] + ((output, channel.out_dim),) + self.quantum[idx[-1] + 1:]
        return CqState(self.classical, quantum, self.values, self.weights, new)

    def discard(self, registers: Sequence[str]) -> CqState:
        """Trace out quantum registers / marginalize classical ones."""
        keep = [n for n in self.names if n not in set(registers)]
        self._split(registers)
        ci, qi = self._split(keep)
        uniq, w, ops = self.marginal(keep)
        classical = tuple(self.classical[i] for i in ci)
        quantum = tuple(self.quantum[i] for i in qi)
        mask = w > 0
        if ops is None:
            ops = np.ones((len(w), 1, 1), dtype=complex) * w[:, None, None]
        states = ops[mask] / w[mask][:, None, None]
        return CqState(classical, quantum, uniq[mask], w[mask] / w[mask].sum(), states)


def cq_entropy(omega: CqState, registers) -> float:
    """Entropy in bits of the reduction of ``omega`` to ``registers``.

    Classical values act as orthogonal basis states, so the entropy of a
    mixed set is ``H(C) + sum_c p(c) H(rho_c)``, evaluated as the spectrum of
    the block-diagonal operator without ever building it.
    """
    registers = list(registers)
    if not registers:
        omega._split(registers)
        return 0.0
    _, w, ops = omega.marginal(registers)
    if ops is None:
        return shannon_entropy(w)
    ev = np.linalg.eigvalsh(ops)
    return spectrum_entropy(ev)


def _as_set(regs) -> set:
    if isinstance(regs, str):
        return {regs}
    return set(regs)


def cq_mutual_information(omega: CqState, a, b, conditioning=()) -> float:
    """``I(A;B|C)`` in bits by entropy combination."""
    a, b, c = _as_set(a), _as_set(b), _as_set(conditioning)
    if a & b or a & c or b & c:
        raise RegisterError(f"register overlap among {sorted(a)}, {sorted(b)}, {sorted(c)}")
    val = (cq_entropy(omega, a | c) + cq_entropy(omega, b | c)
           - cq_entropy(omega, a | b | c) - cq_entropy(omega, c))
    return clamp_information(val)


def clamp_information(val: float) -> float:
    if val < -NEG_CLAMP:
        raise ConsistencyError(f"information quantity {val:.3e} is negative beyond tolerance")
    return max(val, 0.0)


def is_markov_chain(omega: CqState, a, b, c, tol: float = ATOL) -> tuple[bool, float]:
    """Test ``A - B - C`` via ``I(A;C|B) <= tol``; always returns the CMI."""
    cmi = cq_mutual_information(omega, a, c, b)
    return cmi <= tol, cmi


def quantum_state(registers: Sequence[tuple[str, int]], rho) -> CqState:
    """Wrap a plain multipartite density operator as a cq state with no classical part."""
    a = _raw(rho)
    return CqState((), tuple(registers), np.zeros((1, 0)), np.ones(1), a[None])
