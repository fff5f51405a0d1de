"""Single-letter rate regions of the cribbing MAC.

Every region is a pentagon ``{R1 <= b1, R2 <= b2, R1 + R2 <= b12}`` for a
fixed ensemble; the common-message variant adds ``R0 + R1 + R2 <= b0_sum``.
``eval_region`` builds the governing joint state with :mod:`qmac.channels`
and evaluates the displayed entropic quantities. ``table_bounds`` computes
the same numbers from dense probability/state tables and is what the
optimizer calls in its inner loop.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import channels as ch
from .errors import ShapeError, ValidationError
from .quantum_core import (
    CqState,
    clamp_information,
    cq_entropy,
    cq_mutual_information,
    shannon_entropy,
    spectrum_entropy,
)

SLACK = 1e-12
LOG_FLOOR = 1e-300


class RegionKind(str, enum.Enum):
    NONE = "none"
    NONE_COMMON = "none_common"
    DF_SC = "df_sc"
    DF_CAUS = "df_caus"
    CQ_NOISELESS_SC = "cq_noiseless_sc"
    CQ_NOISELESS_CAUS = "cq_noiseless_caus"
    PDF_SC = "pdf_sc"
    CUTSET = "cutset"
    DET_CRIB = "det_crib"


CQ_ONLY = {RegionKind.CQ_NOISELESS_SC, RegionKind.CQ_NOISELESS_CAUS, RegionKind.CUTSET, RegionKind.DET_CRIB}


@dataclass(frozen=True)
class RateBounds:
    b1: float
    b2: float
    b12: float

    def __post_init__(self):
        for name in ("b1", "b2", "b12"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"{name} is not finite")
            object.__setattr__(self, name, clamp_information(float(v)))

    def to_dict(self) -> dict:
        return {"b1": self.b1, "b2": self.b2, "b12": self.b12}


@dataclass(frozen=True)
class CommonRateBounds(RateBounds):
    """Adds the total-rate bound ``R0 + R1 + R2 <= b0_sum``."""

    b0_sum: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "b0_sum", clamp_information(float(self.b0_sum)))

    def to_dict(self) -> dict:
        return {**super().to_dict(), "b0_sum": self.b0_sum}


Channel = Union[ch.CribbingMac, ch.CqMacSpec]


def _mi(omega: CqState, a, b, c=()) -> float:
    return cq_mutual_information(omega, a, b, c)


def _require_cq(kind: RegionKind, channel: Channel) -> ch.CqMacSpec:
    if not isinstance(channel, ch.CqMacSpec):
        raise ShapeError(f"ensemble shape error: region {kind.value} needs a classical-quantum channel")
    return channel


def _as_mac(channel: Channel) -> ch.CribbingMac:
    if isinstance(channel, ch.CqMacSpec):
        return ch.cq_to_cribbing_mac(channel)
    return channel


def _check_kind_shape(kind: RegionKind, ens: ch.EnsembleSpec) -> None:
    if kind is RegionKind.PDF_SC and not ens.has_v:
        raise ShapeError("ensemble shape error: pdf_sc requires p_uv")
    if kind is not RegionKind.PDF_SC and ens.has_v:
        raise ShapeError(f"ensemble shape error: {kind.value} does not use V")
    if kind is RegionKind.DF_CAUS and ens.instrument is None:
        raise ShapeError("ensemble shape error: df_caus requires an instrument")
    if kind is not RegionKind.DF_CAUS and ens.instrument is not None:
        raise ShapeError(f"ensemble shape error: {kind.value} does not use an instrument")


def eval_region(kind, channel: Channel, ens: ch.EnsembleSpec) -> RateBounds:
    """Evaluate the bounds of region ``kind`` at ensemble ``ens``."""
    kind = RegionKind(kind)
    _check_kind_shape(kind, ens)

    if kind in (RegionKind.NONE, RegionKind.NONE_COMMON):
        if isinstance(channel, ch.CqMacSpec):
            om = ch.build_omega_cq(channel, ens)
        else:
            om = ch.build_omega_none(channel, ens)
        b1 = _mi(om, "X1", "B", {"X2", "U"})
        b2 = _mi(om, "X2", "B", {"X1", "U"})
        b12 = _mi(om, {"X1", "X2"}, "B", "U")
        if kind is RegionKind.NONE:
            return RateBounds(b1, b2, b12)
        return CommonRateBounds(b1, b2, b12, _mi(om, {"X1", "X2"}, "B"))

    if kind is RegionKind.DF_SC:
        mac = _as_mac(channel)
        om = ch.build_omega_df_sc(mac, ens)
        ob = ch.channel_output(om, mac)
        return RateBounds(_mi(om, "X1", "E", "U"), _mi(ob, "X2", "B", {"X1", "U"}),
                          _mi(ob, {"X1", "X2"}, "B"))

    if kind is RegionKind.DF_CAUS:
        mac = _as_mac(channel)
        om = ch.build_omega_causal(mac, ens)
        ob = ch.channel_output(om, mac)
        return RateBounds(_mi(om, "X1", {"Ebar", "Z"}, "U"), _mi(ob, "X2", "B", {"X1", "U"}),
                          _mi(ob, {"X1", "X2"}, "B"))

    if kind is RegionKind.PDF_SC:
        mac = _as_mac(channel)
        om = ch.build_omega_pdf(mac, ens)
        ob = ch.channel_output(om, mac)
        b1 = _mi(om, "V", "E", "U") + _mi(ob, "X1", "B", {"X2", "U", "V"})
        return RateBounds(b1, _mi(ob, "X2", "B", {"X1", "U"}), _mi(ob, {"X1", "X2"}, "B"))

    spec = _require_cq(kind, channel)

    if kind is RegionKind.CQ_NOISELESS_SC:
        _require_noiseless(spec, kind)
        om = ch.build_omega_cq(spec, ens)
        h = cq_entropy(om, {"X1", "U"}) - cq_entropy(om, {"U"})
        return RateBounds(h, _mi(om, "X2", "B", {"X1", "U"}), _mi(om, {"X1", "X2"}, "B"))

    if kind is RegionKind.CQ_NOISELESS_CAUS:
        _require_noiseless(spec, kind)
        pj = ens.input_law()
        nx1, nx2 = spec.alphabets
        if pj.shape != (nx1, nx2):
            raise ShapeError("ensemble/channel mismatch: input alphabets differ from the channel table")
        entries = [((x1, x2), w, spec.table[x1, x2]) for (x1, x2), w in np.ndenumerate(pj) if w > 0]
        om = CqState.from_entries([("X1", nx1), ("X2", nx2)], [("B", spec.d_b)], entries)
        return RateBounds(cq_entropy(om, {"X1"}), _mi(om, "X2", "B", "X1"), _mi(om, {"X1", "X2"}, "B"))

    if kind is RegionKind.CUTSET:
        om = ch.build_omega_cq(spec, ens, with_z=True)
        return RateBounds(_mi(om, "X1", {"B", "Z"}, {"X2", "U"}), _mi(om, "X2", "B", {"X1", "U"}),
                          _mi(om, {"X1", "X2"}, "B"))

    if kind is RegionKind.DET_CRIB:
        if not spec.is_deterministic:
            raise ShapeError("ensemble shape error: det_crib requires a 0-1 cribbing matrix")
        om = ch.build_omega_cq(spec, ens, with_z=True)
        hz = cq_entropy(om, {"Z", "U"}) - cq_entropy(om, {"U"})
        b1 = hz + _mi(om, "X1", "B", {"X2", "U", "Z"})
        return RateBounds(b1, _mi(om, "X2", "B", {"X1", "U"}), _mi(om, {"X1", "X2"}, "B"))

    raise ShapeError(f"unknown region kind {kind}")  # pragma: no cover


def _require_noiseless(spec: ch.CqMacSpec, kind: RegionKind) -> None:
    if not (isinstance(spec.cribbing, str) and spec.cribbing == "noiseless"):
        raise ShapeError(f"ensemble shape error: {kind.value} requires noiseless cribbing")


# --- dense table route -----------------------------------------------------

def hermitian_eigvals(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of Hermitian matrices; closed form for 2x2."""
    if m.shape[-1] != 2:
        return np.linalg.eigvalsh(m)
    a = m[:, 0, 0].real
    d = m[:, 1, 1].real
    half = 0.5 * (a + d)
    rad = np.sqrt(0.25 * (a - d) ** 2 + np.abs(m[:, 0, 1]) ** 2)
    return np.concatenate([half - rad, half + rad])


class DenseCq:
    """Classical weights on named axes plus a state table indexed by some of them.

    ``lift`` maps a gradient with respect to this object's weights back to
    the gradient with respect to the caller's joint table.
    """

    _LETTERS = "abcdefghijklmnopqrstuvwx"

    def __init__(self, axes: Sequence[str], weights: np.ndarray,
                 table: Optional[np.ndarray] = None, table_axes: Sequence[str] = (), lift=None):
        self.axes = tuple(axes)
        self.w = weights
        self.table = table
        self.table_axes = tuple(table_axes)
        self.lift = lift
        self._cache = {}
        self._gcache = {}

    def _reduce(self, group, quantum):
        keep = set(group) | (set(self.table_axes) if quantum else set())
        drop = tuple(i for i, a in enumerate(self.axes) if a not in keep)
        w = self.w.sum(axis=drop) if drop else self.w
        rem = [a for a in self.axes if a in keep]
        return w, rem

    def _letters(self, rem, group):
        let = {a: self._LETTERS[i] for i, a in enumerate(self.axes)}
        return ("".join(let[a] for a in rem), "".join(let[a] for a in self.table_axes),
                "".join(let[a] for a in rem if a in group))

    def _mixtures(self, group):
        w, rem = self._reduce(group, True)
        r, t, o = self._letters(rem, group)
        return np.einsum(f"{r},{t}yz->{o}yz", w, self.table)

    def h(self, group, quantum: bool = False) -> float:
        group = frozenset(group)
        key = (group, quantum)
        if key not in self._cache:
            if quantum:
                m = self._mixtures(group)
                d = self.table.shape[-1]
                self._cache[key] = spectrum_entropy(hermitian_eigvals(m.reshape(-1, d, d)))
            else:
                self._cache[key] = shannon_entropy(self._reduce(group, False)[0])
        return self._cache[key]

    def h_grad(self, group, quantum: bool = False) -> np.ndarray:
        """Gradient of :meth:`h` with respect to the weight array."""
        group = frozenset(group)
        key = (group, quantum)
        if key not in self._gcache:
            self._gcache[key] = self._h_grad(group, quantum)
        return self._gcache[key]

    def _h_grad(self, group, quantum):
        if quantum:
            m = self._mixtures(group)
            d = self.table.shape[-1]
            ev, vec = np.linalg.eigh(m.reshape(-1, d, d))
            logs = np.log2(np.maximum(ev, LOG_FLOOR)) + 1 / math.log(2)
            ln = np.einsum("gij,gj,gkj->gik", vec, logs, vec.conj()).reshape(m.shape)
            _, rem = self._reduce(group, True)
            r, t, o = self._letters(rem, group)
            part = -np.einsum(f"{t}yz,{o}zy->{r}", self.table, ln).real
        else:
            w, rem = self._reduce(group, False)
            part = -(np.log2(np.maximum(w, LOG_FLOOR)) + 1 / math.log(2))
        shape = [self.w.shape[i] if a in rem else 1 for i, a in enumerate(self.axes)]
        return np.broadcast_to(part.reshape(shape), self.w.shape)

    # Information quantities as signed entropy terms.
    def hterm(self, group, quantum=False, coef=1.0) -> list:
        return [(coef, self, frozenset(group), quantum)]

    def mi(self, a, c=(), b_classical=None) -> list:
        """``I(A; Q | C)`` with the table as ``Q``, or ``I(A; B | C)`` for classical ``B``."""
        a, c = set(a), set(c)
        if b_classical is None:
            return [(1.0, self, frozenset(a | c), False), (1.0, self, frozenset(c), True),
                    (-1.0, self, frozenset(a | c), True), (-1.0, self, frozenset(c), False)]
        b = set(b_classical)
        return [(1.0, self, frozenset(a | c), False), (1.0, self, frozenset(b | c), False),
                (-1.0, self, frozenset(a | b | c), False), (-1.0, self, frozenset(c), False)]


def _value(terms) -> float:
    return sum(cf * d.h(g, q) for cf, d, g, q in terms)


def _gradient(terms, shape) -> np.ndarray:
    per_source = {}
    for cf, d, g, q in terms:
        acc = per_source.get(id(d))
        gr = cf * d.h_grad(g, q)
        per_source[id(d)] = (d, gr if acc is None else acc[1] + gr)
    out = np.zeros(shape)
    for d, gr in per_source.values():
        out += d.lift(gr) if d.lift is not None else gr
    return out


def _table_terms(kind, P, sigma, eps, q) -> list:
    axes = ("u", "v", "x1", "x2")
    B = DenseCq(axes, P, sigma, ("x1", "x2"))
    if kind is RegionKind.CQ_NOISELESS_CAUS:
        pj = P.sum(axis=(0, 1))
        B2 = DenseCq(("x1", "x2"), pj, sigma, ("x1", "x2"), lift=lambda g: np.broadcast_to(g, P.shape))
        return [B2.hterm({"x1"}), B2.mi({"x2"}, {"x1"}), B2.mi({"x1", "x2"})]
    b2 = B.mi({"x2"}, {"x1", "u"})
    if kind in (RegionKind.NONE, RegionKind.NONE_COMMON):
        out = [B.mi({"x1"}, {"x2", "u"}), b2, B.mi({"x1", "x2"}, {"u"})]
        return out + [B.mi({"x1", "x2"})] if kind is RegionKind.NONE_COMMON else out
    b12 = B.mi({"x1", "x2"})
    if kind is RegionKind.DF_SC:
        E = DenseCq(axes, P, eps, ("x1",))
        return [E.mi({"x1"}, {"u"}), b2, b12]
    if kind is RegionKind.DF_CAUS:
        # V slot holds the outcome Z of a rank-one projective instrument, so
        # the post-measurement cribbing state carries nothing beyond Z
        return [B.mi({"x1"}, {"u"}, {"v"}), b2, b12]
    if kind is RegionKind.PDF_SC:
        E = DenseCq(axes, P, eps, ("x1",))
        return [E.mi({"v"}, {"u"}) + B.mi({"x1"}, {"x2", "u", "v"}), b2, b12]
    if kind is RegionKind.CQ_NOISELESS_SC:
        return [B.hterm({"x1", "u"}) + B.hterm({"u"}, coef=-1.0), b2, b12]
    if kind in (RegionKind.CUTSET, RegionKind.DET_CRIB):
        # Z is classical given X1 and B does not depend on it, so
        # I(X1; BZ | X2 U) = I(X1; Z | X2 U) + I(X1; B | X2 U Z).
        qq = q[None, None, :, None, :]
        BZ = DenseCq(axes + ("z",), P[..., None] * qq, sigma, ("x1", "x2"),
                     lift=lambda g: (g * qq).sum(axis=-1))
        tail = BZ.mi({"x1"}, {"x2", "u", "z"})
        if kind is RegionKind.CUTSET:
            return [BZ.mi({"x1"}, {"x2", "u"}, {"z"}) + tail, b2, b12]
        return [BZ.hterm({"z", "u"}) + BZ.hterm({"u"}, coef=-1.0) + tail, b2, b12]
    raise ShapeError(f"region {kind.value} has no table evaluator")


def table_bounds(kind, P: np.ndarray, sigma: np.ndarray, eps: Optional[np.ndarray] = None,
                 q: Optional[np.ndarray] = None) -> tuple:
    """Region bounds from ``P[u, v, x1, x2]`` and output tables.

    ``sigma[x1, x2]`` are Bob's states, ``eps[x1]`` the cribbing-system states,
    ``q[x1, z]`` a classical cribbing kernel. For ``df_caus`` the ``v`` axis
    holds the outcome of a rank-one projective cribbing measurement and ``P``
    already includes its law. Returns raw floats (unclamped).
    """
    return tuple(_value(t) for t in _table_terms(RegionKind(kind), P, sigma, eps, q))


def table_bounds_grad(kind, P: np.ndarray, sigma: np.ndarray, eps: Optional[np.ndarray] = None,
                      q: Optional[np.ndarray] = None) -> tuple[tuple, np.ndarray]:
    """Bounds and their gradients with respect to ``P`` (stacked on axis 0)."""
    terms = _table_terms(RegionKind(kind), P, sigma, eps, q)
    return tuple(_value(t) for t in terms), np.stack([_gradient(t, P.shape) for t in terms])


def cq_tables(spec: ch.CqMacSpec) -> dict:
    """Fixed tables of a classical-quantum channel for :func:`table_bounds`."""
    q = spec.q_matrix
    eps = np.asarray([np.diag(row).astype(complex) for row in q])
    return {"sigma": spec.table, "eps": eps, "q": q}


# --- bosonic closed forms --------------------------------------------------

def g_thermal(x: float) -> float:
    """Entropy in bits of a thermal state with mean photon number ``x``."""
    if x < 0 or not math.isfinite(x):
        raise ValidationError(f"domain error: g is defined for finite x >= 0, got {x}")
    if x == 0:
        return 0.0
    return (x + 1) * math.log2(x + 1) - x * math.log2(x)


def bosonic_region(params: ch.BosonicParams, with_cribbing: bool) -> RateBounds:
    """Coherent-state regions of the single-mode bosonic MAC.

    With cribbing: the decode-forward inner bound (Alice 2 taps the first
    beam splitter). Without: the known no-cribbing capacity region. Both share
    the ``R2`` and sum-rate bounds.
    """
    e1, e2 = params.eta1, params.eta2
    n1, n2, nc = params.N_A1, params.N_A2, params.N_C
    g = g_thermal
    noise_b = g(e2 * e1 * nc)
    b2 = g(e2 * e1 * nc + (1 - e2) * n2) - noise_b
    b12 = g(e2 * (1 - e1) * n1 + e2 * e1 * nc + (1 - e2) * n2) - noise_b
    if with_cribbing:
        b1 = g(e1 * n1 + (1 - e1) * nc) - g((1 - e1) * nc)
    else:
        b1 = g(e2 * (1 - e1) * n1 + e2 * e1 * nc) - noise_b
    return RateBounds(b1, b2, b12)


def in_region(bounds: RateBounds, r1: float, r2: float) -> bool:
    return (r1 <= bounds.b1 + SLACK and r2 <= bounds.b2 + SLACK
            and r1 + r2 <= bounds.b12 + SLACK)


def corner(bounds: RateBounds, lam: float) -> tuple[float, float]:
    """Vertex of the pentagon maximizing ``lam*R1 + (1-lam)*R2``.

    For ``lam >= 1/2`` R1 is pushed first; otherwise R2.
    """
    if lam >= 0.5:
        r1 = min(bounds.b1, bounds.b12)
        r2 = min(bounds.b2, bounds.b12 - r1)
    else:
        r2 = min(bounds.b2, bounds.b12)
        r1 = min(bounds.b1, bounds.b12 - r2)
    return max(r1, 0.0), max(r2, 0.0)


def polygon(bounds: RateBounds) -> list[tuple[float, float]]:
    """Boundary vertices from the R2 axis to the R1 axis."""
    a = corner(bounds, 0.0)
    b = corner(bounds, 1.0)
    pts = [(0.0, a[1]), a, b, (b[0], 0.0)]
    out = []
    for p in pts:
        if not out or p != out[-1]:
            out.append(p)
    return out
