"""Channel models for the MAC with a cribbing encoder, and joint-state builders.

A quantum MAC is given in decomposed form: a cribbing channel
``L: A1 -> A1' E`` (output ordered ``A1' ⊗ E``) followed by the
communication channel ``N: A1' A2 -> B`` (input ordered ``A1' ⊗ A2``).
Alice 2 observes ``E``; Bob receives ``B``.

Register names used throughout: classical ``U V X1 X2 Z``, quantum
``A1p E Ebar A2 B``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidChannelError, ShapeError, ValidationError
from .quantum_core import (
    ATOL,
    CqState,
    DensityOperator,
    Instrument,
    KrausChannel,
    check_dim,
    cq_mutual_information,
    ptrace,
    quantum_state,
)

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CribbingMac:
    """Decomposed quantum MAC ``N ∘ L``."""

    d_a1: int
    d_a1p: int
    d_e: int
    d_a2: int
    d_b: int
    L: KrausChannel
    N: KrausChannel

    def __post_init__(self):
        if (self.L.in_dim, self.L.out_dim) != (self.d_a1, self.d_a1p * self.d_e):
            raise InvalidChannelError(
                f"invalid channel: L must map dimension {self.d_a1} to {self.d_a1p}*{self.d_e}"
            )
        if (self.N.in_dim, self.N.out_dim) != (self.d_a1p * self.d_a2, self.d_b):
            raise InvalidChannelError(
                f"invalid channel: N must map dimension {self.d_a1p}*{self.d_a2} to {self.d_b}"
            )

    @property
    def dims(self) -> tuple[int, int, int, int, int]:
        return (self.d_a1, self.d_a1p, self.d_e, self.d_a2, self.d_b)

    def crib_output(self, theta: np.ndarray) -> np.ndarray:
        """``L(theta)`` on ``A1' ⊗ E`` for a batch of inputs."""
        return self.L.apply_raw(theta)

    def e_states(self, theta: np.ndarray) -> np.ndarray:
        return ptrace(self.crib_output(theta), [self.d_a1p, self.d_e], [1])

    def a1p_states(self, theta: np.ndarray) -> np.ndarray:
        return ptrace(self.crib_output(theta), [self.d_a1p, self.d_e], [0])

    def output_states(self, theta: np.ndarray, zeta: np.ndarray) -> np.ndarray:
        """Bob's states ``N(Tr_E L(theta_x1) ⊗ zeta_x2)``, shape ``(|X1|, |X2|, d_B, d_B)``."""
        a = self.a1p_states(theta)
        joint = np.einsum("iab,jcd->ijacbd", a, zeta).reshape(
            a.shape[0], zeta.shape[0], self.d_a1p * self.d_a2, self.d_a1p * self.d_a2
        )
        return self.N.apply_raw(joint)

    def composed(self) -> KrausChannel:
        """The overall MAC ``M = Tr_E ∘ N ∘ L`` as a channel on ``A1 ⊗ A2``."""
        eye_a2 = np.eye(self.d_a2)
        ops = []
        for k in self.L.kraus_ops:
            kk = k.reshape(self.d_a1p, self.d_e, self.d_a1)
            for e in range(self.d_e):
                le = np.kron(kk[:, e, :], eye_a2)
                for n in self.N.kraus_ops:
                    ops.append(n @ le)
        return KrausChannel(self.d_a1 * self.d_a2, self.d_b, tuple(ops))


@dataclass(frozen=True, eq=False)
class CqMacSpec:
    """Classical-quantum MAC ``(x1, x2) -> sigma_B^{x1 x2}`` with a cribbing model.

    ``cribbing`` is ``"noiseless"``, ``"none"`` or a row-stochastic matrix
    ``Q[x1, z]``.
    """

    table: np.ndarray
    cribbing: object = "noiseless"

    def __post_init__(self):
        t = np.asarray(self.table, dtype=complex)
        if t.ndim != 4 or t.shape[2] != t.shape[3]:
            raise ValidationError("cq table must have shape (|X1|, |X2|, d_B, d_B)")
        for x1 in range(t.shape[0]):
            for x2 in range(t.shape[1]):
                try:
                    DensityOperator(t[x1, x2])
                except ValidationError as exc:
                    raise ValidationError(f"table entry ({x1}, {x2}): {exc}") from None
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        crib = self.cribbing
        if isinstance(crib, str):
            if crib not in ("noiseless", "none"):
                raise ValidationError(f"unknown cribbing mode {crib!r}")
        else:
            q = np.asarray(crib, dtype=float)
            if q.ndim != 2 or q.shape[0] != t.shape[0]:
                raise ValidationError("cribbing matrix Q must have one row per x1")
            if np.any(q < 0) or np.max(np.abs(q.sum(axis=1) - 1.0)) > SIMPLEX_TOL:
                raise ValidationError("cribbing matrix Q rows must be probability vectors")
            q.setflags(write=False)
            object.__setattr__(self, "cribbing", q)

    @property
    def alphabets(self) -> tuple[int, int]:
        return self.table.shape[0], self.table.shape[1]

    @property
    def d_b(self) -> int:
        return self.table.shape[2]

    @property
    def q_matrix(self) -> np.ndarray:
        """Cribbing observation kernel; noiseless is the identity, none a single column."""
        if isinstance(self.cribbing, str):
            nx1 = self.table.shape[0]
            return np.eye(nx1) if self.cribbing == "noiseless" else np.ones((nx1, 1))
        return self.cribbing

    @property
    def is_deterministic(self) -> bool:
        q = self.q_matrix
        return bool(np.all((q == 0) | (q == 1)))


@dataclass(frozen=True)
class BosonicParams:
    eta1: float
    eta2: float
    N_A1: float
    N_A2: float
    N_C: float

    def __post_init__(self):
        for name in ("eta1", "eta2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")
        for name in ("N_A1", "N_A2", "N_C"):
            v = getattr(self, name)
            if not (v >= 0.0 and np.isfinite(v)):
                raise ValidationError(f"{name} must be a finite non-negative number, got {v}")


def _check_simplex(p: np.ndarray, name: str) -> None:
    if np.any(~np.isfinite(p)) or np.any(p < -SIMPLEX_TOL):
        raise ValidationError(f"{name} has negative or non-finite entries")
    err = np.max(np.abs(p.sum(axis=-1) - 1.0))
    if err > SIMPLEX_TOL:
        raise ValidationError(f"{name} rows do not sum to 1 (deviation {err:.3e})")


def _state_stack(states, name: str) -> Optional[np.ndarray]:
    if states is None:
        return None
    arr = np.asarray([np.asarray(s, dtype=complex) for s in states])
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValidationError(f"{name} must be a list of square matrices")
    for i, m in enumerate(arr):
        try:
            DensityOperator(m)
        except ValidationError as exc:
            raise ValidationError(f"{name}[{i}]: {exc}") from None
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Input distributions and input-state tables for one point of a region union.

    Exactly one of ``p_u`` (shape ``(|U|,)``) and ``p_uv`` (shape ``(|U|, |V|)``)
    is given. Conditionals put the conditioning variables first:
    ``p_x1[u, x1]`` or ``p_x1[u, v, x1]``; ``p_x2[u, x2]``, ``p_x2[u, v, x2]``,
    or ``p_x2[u, z, x2]`` when an instrument is present. ``p_x1x2`` is an
    optional joint input law used by the non-causal/causal noiseless region.
    """

    p_x1: np.ndarray
    p_x2: np.ndarray
    p_u: Optional[np.ndarray] = None
    p_uv: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None
    zeta: Optional[np.ndarray] = None
    instrument: Optional[Instrument] = None
    p_x1x2: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.p_u is None) == (self.p_uv is None):
            raise ShapeError("ensemble shape error: give exactly one of p_u and p_uv")
        if self.p_u is not None:
            pu = np.asarray(self.p_u, dtype=float)
            if pu.ndim != 1:
                raise ShapeError("ensemble shape error: p_u must be a vector")
            _check_simplex(pu, "p_u")
            object.__setattr__(self, "p_u", pu)
        else:
            puv = np.asarray(self.p_uv, dtype=float)
            if puv.ndim != 2:
                raise ShapeError("ensemble shape error: p_uv must be a matrix")
            _check_simplex(puv.ravel(), "p_uv")
            object.__setattr__(self, "p_uv", puv)
        lead = (self.card_u,) if self.p_u is not None else (self.card_u, self.card_v)
        p1 = np.asarray(self.p_x1, dtype=float)
        if p1.shape[:-1] != lead:
            raise ShapeError(f"ensemble shape error: p_x1 must have leading shape {lead}, got {p1.shape}")
        _check_simplex(p1, "p_x1")
        object.__setattr__(self, "p_x1", p1)
        p2 = np.asarray(self.p_x2, dtype=float)
        if self.instrument is not None:
            if self.p_uv is not None:
                raise ShapeError("ensemble shape error: an instrument cannot be combined with V")
            want = (self.card_u, len(self.instrument))
        else:
            want = lead
        if p2.shape[:-1] != want:
            raise ShapeError(f"ensemble shape error: p_x2 must have leading shape {want}, got {p2.shape}")
        _check_simplex(p2, "p_x2")
        object.__setattr__(self, "p_x2", p2)
        theta = _state_stack(self.theta, "theta")
        zeta = _state_stack(self.zeta, "zeta")
        if theta is not None and len(theta) != self.card_x1:
            raise ShapeError("ensemble shape error: theta needs one state per x1")
        if zeta is not None and len(zeta) != self.card_x2:
            raise ShapeError("ensemble shape error: zeta needs one state per x2")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "zeta", zeta)
        if self.p_x1x2 is not None:
            j = np.asarray(self.p_x1x2, dtype=float)
            if j.shape != (self.card_x1, self.card_x2):
                raise ShapeError("ensemble shape error: p_x1x2 must be |X1| x |X2|")
            _check_simplex(j.ravel(), "p_x1x2")
            object.__setattr__(self, "p_x1x2", j)

    @property
    def card_u(self) -> int:
        return (self.p_u if self.p_u is not None else self.p_uv).shape[0]

    @property
    def card_v(self) -> int:
        return 1 if self.p_uv is None else self.p_uv.shape[1]

    @property
    def has_v(self) -> bool:
        return self.p_uv is not None

    @property
    def card_x1(self) -> int:
        return self.p_x1.shape[-1]

    @property
    def card_x2(self) -> int:
        return self.p_x2.shape[-1]

    def joint(self) -> np.ndarray:
        """``P[u, v, x1, x2]`` for product ensembles (``|V| = 1`` when absent)."""
        if self.instrument is not None:
            raise ShapeError("ensemble shape error: joint law of a causal ensemble depends on the channel")
        if self.p_uv is None:
            puv = self.p_u[:, None]
            p1 = self.p_x1[:, None, :]
            p2 = self.p_x2[:, None, :]
        else:
            puv, p1, p2 = self.p_uv, self.p_x1, self.p_x2
        return puv[:, :, None, None] * p1[:, :, :, None] * p2[:, :, None, :]

    def input_law(self) -> np.ndarray:
        """Joint ``p(x1, x2)``: ``p_x1x2`` if supplied, else the U-mixture."""
        if self.p_x1x2 is not None:
            return self.p_x1x2
        return self.joint().sum(axis=(0, 1))


def basis_stack(count: int, dim: int) -> np.ndarray:
    if count > dim:
        raise ShapeError(f"ensemble shape error: {count} basis states requested in dimension {dim}")
    out = np.zeros((count, dim, dim), dtype=complex)
    out[np.arange(count), np.arange(count), np.arange(count)] = 1.0
    return out


def input_states(mac: CribbingMac, ens: EnsembleSpec) -> tuple[np.ndarray, np.ndarray]:
    theta = ens.theta if ens.theta is not None else basis_stack(ens.card_x1, mac.d_a1)
    zeta = ens.zeta if ens.zeta is not None else basis_stack(ens.card_x2, mac.d_a2)
    if theta.shape[1] != mac.d_a1 or zeta.shape[1] != mac.d_a2:
        raise ShapeError("ensemble/channel mismatch: input state dimensions differ from the channel's")
    return theta, zeta


def _product_omega(mac: CribbingMac, ens: EnsembleSpec) -> CqState:
    if ens.instrument is not None:
        raise ShapeError("ensemble shape error: instrument given for a strictly-causal region")
    theta, zeta = input_states(mac, ens)
    crib = mac.crib_output(theta)
    d = mac.d_a1p * mac.d_e * mac.d_a2
    check_dim(d, "joint input state")
    joint = ens.joint()
    entries = []
    for (u, v, x1, x2), w in np.ndenumerate(joint):
        if w <= 0:
            continue
        tup = (u, v, x1, x2) if ens.has_v else (u, x1, x2)
        entries.append((tup, w, np.kron(crib[x1], zeta[x2])))
    classical = [("U", ens.card_u)] + ([("V", ens.card_v)] if ens.has_v else [])
    classical += [("X1", ens.card_x1), ("X2", ens.card_x2)]
    quantum = [("A1p", mac.d_a1p), ("E", mac.d_e), ("A2", mac.d_a2)]
    return _normalized(classical, quantum, entries)


def _normalized(classical, quantum, entries) -> CqState:
    total = sum(w for _, w, _ in entries)
    return CqState.from_entries(classical, quantum, [(t, w / total, s) for t, w, s in entries])


def build_omega_df_sc(mac: CribbingMac, ens: EnsembleSpec) -> CqState:
    """Joint state over ``(U, X1, X2; A1', E, A2)`` for the strictly-causal regions."""
    if ens.has_v:
        raise ShapeError("ensemble shape error: V is only used by the partial decode-forward region")
    return _product_omega(mac, ens)


def build_omega_pdf(mac: CribbingMac, ens: EnsembleSpec) -> CqState:
    """Joint state over ``(U, V, X1, X2; A1', E, A2)``."""
    if not ens.has_v:
        raise ShapeError("ensemble shape error: partial decode-forward needs p_uv")
    return _product_omega(mac, ens)


def build_omega_causal(mac: CribbingMac, ens: EnsembleSpec) -> CqState:
    """Post-measurement joint state over ``(U, X1, Z, X2; A1', Ebar, A2)``.

    Outcome ``z`` has probability ``Tr[W_z L(theta)_E W_z^†]``; zero-probability
    outcomes are dropped.
    """
    inst = ens.instrument
    if inst is None:
        raise ShapeError("ensemble shape error: causal region needs an instrument")
    if inst.in_dim != mac.d_e:
        raise ShapeError(f"ensemble/channel mismatch: instrument acts on dimension {inst.in_dim}, E has {mac.d_e}")
    if ens.has_v:
        raise ShapeError("ensemble shape error: V is not used by the causal region")
    theta, zeta = input_states(mac, ens)
    crib = mac.crib_output(theta)
    wops = np.asarray([np.kron(np.eye(mac.d_a1p), w) for w in inst.operators])
    post = np.einsum("zab,xbc,zdc->xzad", wops, crib, wops.conj())
    probs = np.real(np.trace(post, axis1=2, axis2=3))
    entries = []
    for u in range(ens.card_u):
        for x1 in range(ens.card_x1):
            for z in range(len(inst)):
                pz = probs[x1, z]
                if pz <= ATOL * ATOL:
                    continue
                rho = post[x1, z] / pz
                for x2 in range(ens.card_x2):
                    w = ens.p_u[u] * ens.p_x1[u, x1] * pz * ens.p_x2[u, z, x2]
                    if w > 0:
                        entries.append(((u, x1, z, x2), w, np.kron(rho, zeta[x2])))
    classical = [("U", ens.card_u), ("X1", ens.card_x1), ("Z", len(inst)), ("X2", ens.card_x2)]
    quantum = [("A1p", mac.d_a1p), ("Ebar", mac.d_e), ("A2", mac.d_a2)]
    return _normalized(classical, quantum, entries)


def channel_output(omega: CqState, mac: CribbingMac) -> CqState:
    """Discard the cribbing register and send ``A1' A2`` through ``N``."""
    crib = "E" if "E" in omega.names else "Ebar"
    return omega.discard([crib]).apply(mac.N, ["A1p", "A2"], "B")


def build_omega_none(mac: CribbingMac, ens: EnsembleSpec) -> CqState:
    """``(U, X1, X2; B)`` through the overall MAC, no cribbing."""
    if ens.instrument is not None or ens.has_v:
        raise ShapeError("ensemble shape error: no-cribbing region takes p_u, p_x1|u, p_x2|u only")
    theta, zeta = input_states(mac, ens)
    sigma = mac.output_states(theta, zeta)
    joint = ens.joint()[:, 0]
    entries = [((u, x1, x2), w, sigma[x1, x2]) for (u, x1, x2), w in np.ndenumerate(joint) if w > 0]
    classical = [("U", ens.card_u), ("X1", ens.card_x1), ("X2", ens.card_x2)]
    return _normalized(classical, [("B", mac.d_b)], entries)


def build_omega_cq(spec: CqMacSpec, ens: EnsembleSpec, with_z: bool = False) -> CqState:
    """``(U, X1, [Z,] X2; B)`` for a classical-quantum MAC."""
    if ens.instrument is not None or ens.has_v:
        raise ShapeError("ensemble shape error: expected p_u, p_x1|u, p_x2|u")
    nx1, nx2 = spec.alphabets
    if (ens.card_x1, ens.card_x2) != (nx1, nx2):
        raise ShapeError("ensemble/channel mismatch: input alphabets differ from the channel table")
    joint = ens.joint()[:, 0]
    q = spec.q_matrix
    entries = []
    for (u, x1, x2), w in np.ndenumerate(joint):
        if w <= 0:
            continue
        if with_z:
            for z in range(q.shape[1]):
                if q[x1, z] > 0:
                    entries.append(((u, x1, z, x2), w * q[x1, z], spec.table[x1, x2]))
        else:
            entries.append(((u, x1, x2), w, spec.table[x1, x2]))
    classical = [("U", ens.card_u), ("X1", nx1)]
    classical += [("Z", q.shape[1])] if with_z else []
    classical += [("X2", nx2)]
    return _normalized(classical, [("B", spec.d_b)], entries)


@dataclass(frozen=True)
class RobustnessReport:
    certified: bool
    cmi_values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"certified": self.certified, "cmi_values": [float(c) for c in self.cmi_values]}


def _crib_cmi(mac: CribbingMac, joint_input: np.ndarray, d_ref: int) -> float:
    """``I(A0; A1' | E)`` after ``L ⊗ id_A0`` acts on ``theta_{A1 A0}``."""
    ext = mac.L.tensor(KrausChannel.identity(d_ref))
    out = ext.apply_raw(joint_input)
    omega = quantum_state([("A1p", mac.d_a1p), ("E", mac.d_e), ("A0", d_ref)], out)
    return cq_mutual_information(omega, "A0", "A1p", "E")


def check_robust_cribbing(mac: CribbingMac, tol: float = 1e-9,
                          extra_inputs: Optional[Sequence] = None) -> RobustnessReport:
    """Certify the Markov chain ``A0 - E - A1'`` on the maximally entangled input.

    A zero conditional mutual information on the Choi input gives an
    input-independent recovery map, which suffices for robustness. A positive
    value only means "not certified". Additional joint inputs ``theta_{A1 A0}``
    are checked as supplied.
    """
    d = mac.d_a1
    phi = np.eye(d).reshape(d * d) / np.sqrt(d)
    cmis = [_crib_cmi(mac, np.outer(phi, phi.conj()), d)]
    for i, theta in enumerate(extra_inputs or ()):
        m = np.asarray(theta, dtype=complex)
        DensityOperator(m)
        if m.shape[0] % d:
            raise ShapeError(f"extra input {i}: dimension {m.shape[0]} is not a multiple of d_A1 = {d}")
        cmis.append(_crib_cmi(mac, m, m.shape[0] // d))
    return RobustnessReport(all(c <= tol for c in cmis), cmis)


def cq_to_cribbing_mac(spec: CqMacSpec) -> CribbingMac:
    """Embed a classical-quantum MAC in the quantum model with computational-basis inputs.

    ``L`` keeps ``x1`` on ``A1'`` and writes the cribbing observation to ``E``
    (a copy, a ``Q``-noisy copy, or nothing); ``N`` measures ``A1' A2`` in the
    computational basis and prepares the table state.
    """
    nx1, nx2 = spec.alphabets
    q = spec.q_matrix
    nz = q.shape[1]
    lops = []
    for z in range(nz):
        k = np.zeros((nx1 * nz, nx1))
        for x1 in range(nx1):
            k[x1 * nz + z, x1] = np.sqrt(q[x1, z])
        lops.append(k)
    L = KrausChannel(nx1, nx1 * nz, tuple(lops))
    nops = []
    for x1 in range(nx1):
        for x2 in range(nx2):
            ev, vec = np.linalg.eigh(spec.table[x1, x2])
            bra = np.zeros(nx1 * nx2)
            bra[x1 * nx2 + x2] = 1.0
            for lam, v in zip(ev, vec.T):
                if lam > 0:
                    nops.append(np.sqrt(lam) * np.outer(v, bra))
    N = KrausChannel(nx1 * nx2, spec.d_b, tuple(nops))
    return CribbingMac(nx1, nx1, nz, nx2, spec.d_b, L, N)
