"""Weighted-rate maximization over ensembles and Pareto frontiers.

The search is local and restarted: projected coordinate moves on every
probability simplex, interleaved with Nelder-Mead over continuous state and
measurement angles. Restart ``k`` draws its initial point from an
independent PCG64 stream keyed by ``(seed, k)``, so results do not depend on
the order (or concurrency) in which restarts run.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from . import channels as ch
from . import regions as rg
from .errors import ConfigError, ConsistencyError, ShapeError
from .prng import make_rng
from .quantum_core import Instrument

PARAMETERIZATIONS = ("fixed", "pure_qubit_angles", "basis_states")
MIN_STEP = 1e-4
POLISH_STEP = 1e-3


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based, exact)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    max_iters: int = 500
    tol: float = 1e-7
    seed: int = 0
    card_u: Optional[int] = None
    card_v: Optional[int] = None
    card_x1: Optional[int] = None
    card_x2: Optional[int] = None
    state_parameterization: str = "basis_states"
    max_card: int = 16
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ConfigError("config error: restarts and max_iters must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("config error: seed must be a 64-bit unsigned integer")
        for name in ("card_u", "card_v", "card_x1", "card_x2"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"config error: {name} override must be >= 1, got {v}")
        if self.state_parameterization not in PARAMETERIZATIONS:
            raise ConfigError(f"config error: unknown state parameterization {self.state_parameterization!r}")
        if self.max_card < 1 or self.workers < 1:
            raise ConfigError("config error: max_card and workers must be positive")


def cardinality_bounds(d_a1: int, d_a2: int, d_b: int) -> tuple[int, int, int]:
    """Support sizes that exhaust the strictly-causal decode-forward union."""
    return d_b**2 + 2, (d_a1**2 + 2) * (d_b**4 + 2), (d_a2**2 + 1) * (d_b**2 + 2)


@dataclass
class ParetoPoint:
    lam: float
    r1: float
    r2: float
    objective: float
    bounds: rg.RateBounds
    ensemble: ch.EnsembleSpec = field(repr=False)
    restart: int = 0


# --- search space ----------------------------------------------------------

@dataclass
class _Space:
    kind: rg.RegionKind
    channel: object
    cu: int
    cv: int
    cx1: int
    cx2: int
    nz: int = 1
    theta_mode: str = "basis"
    zeta_mode: str = "basis"
    theta: Optional[np.ndarray] = None
    zeta: Optional[np.ndarray] = None
    tables: dict = field(default_factory=dict)

    @property
    def is_cq(self) -> bool:
        return isinstance(self.channel, ch.CqMacSpec)

    def simplex_shapes(self) -> list[tuple[str, tuple]]:
        k = self.kind
        if k is rg.RegionKind.CQ_NOISELESS_CAUS:
            return [("p_x1x2", (self.cx1 * self.cx2,))]
        if k is rg.RegionKind.PDF_SC:
            # X2 depends on U only, as in the partial decode-forward codebook;
            # letting it follow V as well overshoots the cutset outer bound
            return [("p_uv", (self.cu * self.cv,)), ("p_x1", (self.cu, self.cv, self.cx1)),
                    ("p_x2", (self.cu, self.cx2))]
        if k is rg.RegionKind.DF_CAUS:
            return [("p_u", (self.cu,)), ("p_x1", (self.cu, self.cx1)), ("p_x2", (self.cu, self.nz, self.cx2))]
        return [("p_u", (self.cu,)), ("p_x1", (self.cu, self.cx1)), ("p_x2", (self.cu, self.cx2))]

    def n_angles(self) -> int:
        n = 0
        if self.theta_mode == "angles":
            n += 2 * self.cx1
        if self.zeta_mode == "angles":
            n += 2 * self.cx2
        if self.kind is rg.RegionKind.DF_CAUS:
            n += self.channel_mac.d_e ** 2 - 1
        return n

    @property
    def channel_mac(self) -> ch.CribbingMac:
        if "mac" not in self.tables:
            self.tables["mac"] = ch.cq_to_cribbing_mac(self.channel) if self.is_cq else self.channel
        return self.tables["mac"]


def _pure_qubits(angles: np.ndarray) -> np.ndarray:
    a = angles.reshape(-1, 2)
    vec = np.stack([np.cos(a[:, 0] / 2), np.exp(1j * a[:, 1]) * np.sin(a[:, 0] / 2)], axis=1)
    return np.einsum("ni,nj->nij", vec, vec.conj())


def _gell_mann(d: int) -> np.ndarray:
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1
            mats.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k], m[k, j] = -1j, 1j
            mats.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1
        m[l, l] = -l
        mats.append(m * np.sqrt(2 / (l * (l + 1))))
    return np.asarray(mats).reshape(-1, d, d)


def angle_unitary(angles: np.ndarray, d: int) -> np.ndarray:
    """``exp(i sum_k a_k G_k)`` over the generalized Gell-Mann basis."""
    h = np.einsum("k,kij->ij", angles, _gell_mann(d)) if d > 1 else np.zeros((1, 1))
    return scipy.linalg.expm(1j * h)


class _Problem:
    """Objective evaluation for one (kind, channel, lambda)."""

    def __init__(self, space: _Space, lam: float):
        self.s = space
        self.lam = lam
        self.shapes = space.simplex_shapes()
        self.sizes = [int(np.prod(sh)) for _, sh in self.shapes]

    def split(self, flat: np.ndarray) -> dict:
        out, i = {}, 0
        for (name, shape), n in zip(self.shapes, self.sizes):
            out[name] = flat[i:i + n].reshape(shape)
            i += n
        return out

    def states(self, angles: np.ndarray):
        """Input states and (causal kinds) the cribbing unitary encoded by ``angles``."""
        s = self.s
        i = 0
        mac = s.channel_mac
        if s.theta_mode == "angles":
            theta = _pure_qubits(angles[i:i + 2 * s.cx1]); i += 2 * s.cx1
        elif s.theta_mode == "fixed":
            theta = s.theta
        else:
            theta = ch.basis_stack(s.cx1, mac.d_a1)
        if s.zeta_mode == "angles":
            zeta = _pure_qubits(angles[i:i + 2 * s.cx2]); i += 2 * s.cx2
        elif s.zeta_mode == "fixed":
            zeta = s.zeta
        else:
            zeta = ch.basis_stack(s.cx2, mac.d_a2)
        unitary = angle_unitary(angles[i:], mac.d_e) if s.kind is rg.RegionKind.DF_CAUS else None
        return theta, zeta, unitary

    def ensemble(self, flat: np.ndarray, angles: np.ndarray) -> ch.EnsembleSpec:
        d = self.split(flat)
        s = self.s
        theta, zeta, unitary = self.states(angles)
        if s.is_cq:
            theta = zeta = None
        if s.kind is rg.RegionKind.CQ_NOISELESS_CAUS:
            pj = d["p_x1x2"].reshape(s.cx1, s.cx2)
            return ch.EnsembleSpec(p_u=[1.0], p_x1=pj.sum(1)[None], p_x2=pj.sum(0)[None], p_x1x2=pj)
        if s.kind is rg.RegionKind.PDF_SC:
            p2 = np.repeat(d["p_x2"][:, None], s.cv, axis=1)
            return ch.EnsembleSpec(p_uv=d["p_uv"].reshape(s.cu, s.cv), p_x1=d["p_x1"], p_x2=p2,
                                   theta=theta, zeta=zeta)
        inst = Instrument.projective(unitary) if unitary is not None else None
        return ch.EnsembleSpec(p_u=d["p_u"], p_x1=d["p_x1"], p_x2=d["p_x2"], theta=theta, zeta=zeta,
                               instrument=inst)

    def _factors(self, flat: np.ndarray):
        """``(p_uv, p_x1, p_x2)`` with a singleton V axis outside PDF."""
        s = self.s
        d = self.split(flat)
        if s.kind is rg.RegionKind.PDF_SC:
            p2 = np.broadcast_to(d["p_x2"][:, None], (s.cu, s.cv, s.cx2))
            return d["p_uv"].reshape(s.cu, s.cv), d["p_x1"], p2
        return d["p_u"][:, None], d["p_x1"][:, None], d["p_x2"][:, None]

    def joint(self, flat: np.ndarray, tables: dict) -> np.ndarray:
        """Joint table ``P[u, v, x1, x2]``; for causal kinds the V slot carries Z."""
        s = self.s
        if s.kind is rg.RegionKind.CQ_NOISELESS_CAUS:
            return flat.reshape(1, 1, s.cx1, s.cx2)
        if s.kind is rg.RegionKind.DF_CAUS:
            d = self.split(flat)
            return np.einsum("u,ua,az,uzb->uzab", d["p_u"], d["p_x1"], tables["q"], d["p_x2"])
        puv, p1, p2 = self._factors(flat)
        return puv[:, :, None, None] * p1[:, :, :, None] * p2[:, :, None, :]

    def joint_vjp(self, flat: np.ndarray, tables: dict, G: np.ndarray) -> np.ndarray:
        """Pull gradients ``G[k, u, v, x1, x2]`` back onto the flat parameters."""
        s = self.s
        k = len(G)
        if s.kind is rg.RegionKind.CQ_NOISELESS_CAUS:
            return G.reshape(k, -1)
        if s.kind is rg.RegionKind.DF_CAUS:
            d = self.split(flat)
            pu, p1, q, p2 = d["p_u"], d["p_x1"], tables["q"], d["p_x2"]
            parts = [np.einsum("kuzab,ua,az,uzb->ku", G, p1, q, p2),
                     np.einsum("kuzab,u,az,uzb->kua", G, pu, q, p2),
                     np.einsum("kuzab,u,ua,az->kuzb", G, pu, p1, q)]
            return np.concatenate([x.reshape(k, -1) for x in parts], axis=1)
        puv, p1, p2 = self._factors(flat)
        g_uv = np.einsum("kuvab,uva,uvb->kuv", G, p1, p2)
        g_1 = np.einsum("kuvab,uv,uvb->kuva", G, puv, p2)
        g_2 = np.einsum("kuvab,uv,uva->kuvb", G, puv, p1)
        if s.kind is rg.RegionKind.PDF_SC:
            g_2 = g_2.sum(axis=2)
        return np.concatenate([g_uv.reshape(k, -1), g_1.reshape(k, -1), g_2.reshape(k, -1)], axis=1)

    def tables(self, angles: np.ndarray) -> dict:
        s = self.s
        if s.is_cq and s.kind is not rg.RegionKind.DF_CAUS:
            return s.tables["cq"]
        key = angles.tobytes()
        if s.tables.get("key") != key:
            theta, zeta, unitary = self.states(angles)
            if s.is_cq:
                t = {"sigma": s.tables["cq"]["sigma"], "eps": s.tables["cq"]["eps"]}
            else:
                mac = s.channel_mac
                t = {"sigma": mac.output_states(theta, zeta), "eps": mac.e_states(theta)}
            if unitary is not None:
                # outcome z of the rank-one measurement {|w_z><w_z|} on E
                t["q"] = np.clip(np.einsum("iz,aij,jz->az", unitary.conj(), t["eps"], unitary).real, 0.0, None)
            s.tables["key"] = key
            s.tables["angle_tables"] = t
        return s.tables["angle_tables"]

    def bounds(self, flat: np.ndarray, angles: np.ndarray) -> tuple:
        t = self.tables(angles)
        return rg.table_bounds(self.s.kind, self.joint(flat, t), **t)[:3]

    def dual_pieces(self) -> np.ndarray:
        """Rows ``D`` with ``lam*r1 + (1-lam)*r2 = min(D @ b)`` at the corner."""
        l = self.lam
        if l >= 0.5:
            return np.array([[l, 1 - l, 0.0], [2 * l - 1, 0.0, 1 - l], [0.0, 0.0, l]])
        return np.array([[l, 1 - l, 0.0], [0.0, 1 - 2 * l, l], [0.0, 0.0, 1 - l]])

    def pieces_and_grad(self, flat: np.ndarray, angles: np.ndarray):
        t = self.tables(angles)
        b, G = rg.table_bounds_grad(self.s.kind, self.joint(flat, t), **t)
        D = self.dual_pieces()
        return D @ np.asarray(b[:3]), D @ self.joint_vjp(flat, t, G[:3])

    def objective(self, flat: np.ndarray, angles: np.ndarray) -> float:
        b1, b2, b12 = self.bounds(flat, angles)
        r1, r2 = rg.corner(_Loose(b1, b2, b12), self.lam)
        return self.lam * r1 + (1 - self.lam) * r2


@dataclass
class _Loose:
    b1: float
    b2: float
    b12: float


def _resolve_space(kind: rg.RegionKind, channel, cfg: OptimizerConfig, theta=None, zeta=None) -> _Space:
    cap = cfg.max_card

    def pick(override, default):
        return override if override is not None else min(default, cap)

    if isinstance(channel, ch.CqMacSpec):
        nx1, nx2 = channel.alphabets
        for name, fixed in (("card_x1", nx1), ("card_x2", nx2)):
            v = getattr(cfg, name)
            if v is not None and v != fixed:
                raise ConfigError(f"config error: {name} is fixed to {fixed} by the channel table")
        if kind in rg.CQ_ONLY:
            if kind is rg.RegionKind.CQ_NOISELESS_SC or kind is rg.RegionKind.CQ_NOISELESS_CAUS:
                rg._require_noiseless(channel, kind)
            if kind is rg.RegionKind.DET_CRIB and not channel.is_deterministic:
                raise ShapeError("ensemble shape error: det_crib requires a 0-1 cribbing matrix")
        cu = pick(cfg.card_u, channel.d_b**2 + 2)
        d_e = channel.q_matrix.shape[1]
        sp = _Space(kind, channel, cu, 1, nx1, nx2)
        if kind is rg.RegionKind.PDF_SC:
            sp.cv = pick(cfg.card_v, max(2, d_e))
        if kind is rg.RegionKind.DF_CAUS:
            sp.nz = d_e
        sp.tables["cq"] = rg.cq_tables(channel)
        return sp

    mac: ch.CribbingMac = channel
    if kind in rg.CQ_ONLY:
        raise ShapeError(f"ensemble shape error: region {kind.value} needs a classical-quantum channel")
    lu, lx1, lx2 = cardinality_bounds(mac.d_a1, mac.d_a2, mac.d_b)
    mode = cfg.state_parameterization
    sp = _Space(kind, mac, pick(cfg.card_u, lu), 1, 0, 0)
    if mode == "fixed":
        if theta is None or zeta is None:
            raise ConfigError("config error: fixed state parameterization needs theta and zeta")
        sp.theta = np.asarray(theta, dtype=complex)
        sp.zeta = np.asarray(zeta, dtype=complex)
        sp.theta_mode = sp.zeta_mode = "fixed"
        sp.cx1, sp.cx2 = len(sp.theta), len(sp.zeta)
    else:
        for side, d, bound, override in (("theta", mac.d_a1, lx1, cfg.card_x1), ("zeta", mac.d_a2, lx2, cfg.card_x2)):
            if mode == "pure_qubit_angles" and d == 2:
                setattr(sp, side + "_mode", "angles")
                card = pick(override, bound)
            else:
                card = override if override is not None else d
                if card > d:
                    raise ConfigError(f"config error: {card} basis states do not fit in dimension {d}")
            if side == "theta":
                sp.cx1 = card
            else:
                sp.cx2 = card
    if kind is rg.RegionKind.PDF_SC:
        sp.cv = pick(cfg.card_v, max(2, mac.d_e))
    if kind is rg.RegionKind.DF_CAUS:
        sp.nz = mac.d_e
    return sp


# --- local search ----------------------------------------------------------

def _initial(prob: _Problem, rng: np.random.Generator, restart: int) -> tuple[np.ndarray, np.ndarray]:
    parts = []
    for (name, shape), n in zip(prob.shapes, prob.sizes):
        rows = int(np.prod(shape[:-1])) if len(shape) > 1 else 1
        k = shape[-1]
        if restart == 0:
            parts.append(np.full(rows * k, 1.0 / k))
        else:
            parts.append(rng.dirichlet(np.ones(k), size=rows).ravel())
    na = prob.s.n_angles()
    angles = rng.uniform(0, 2 * np.pi, size=na) if restart else np.full(na, 0.3)
    return np.concatenate(parts), angles


def _row_slices(prob: _Problem) -> list[slice]:
    out, i = [], 0
    for (name, shape), n in zip(prob.shapes, prob.sizes):
        k = shape[-1]
        for r in range(n // k):
            out.append(slice(i + r * k, i + (r + 1) * k))
        i += n
    return out


def _coordinate_move(prob: _Problem, flat, angles, f, sl, step):
    """First improving +-step move on one coordinate of a simplex row,
    extended greedily (doubling) along the same direction while it helps."""
    row = flat[sl]
    for i in range(len(row)):
        for sgn in (1.0, -1.0):
            s, best = step, None
            while True:
                cand = row.copy()
                cand[i] += sgn * s
                cand = project_simplex(cand)
                if np.array_equal(cand, row if best is None else best[1][sl]):
                    break
                trial = flat.copy()
                trial[sl] = cand
                fc = prob.objective(trial, angles)
                if fc <= (f if best is None else best[0]) + 1e-15:
                    break
                best = (fc, trial)
                s *= 2.0
            if best is not None:
                return best[0], best[1], True
    return f, flat, False


def _coordinate_ascent(prob: _Problem, flat, angles, f, cfg: OptimizerConfig, step: float):
    """Projected coordinate ascent over every simplex row until steps fall below MIN_STEP."""
    rows = [sl for sl in _row_slices(prob) if sl.stop - sl.start > 1]
    if not rows:
        return f, flat
    steps = np.full(len(rows), step)
    for _ in range(cfg.max_iters):
        f_start = f
        for r, sl in enumerate(rows):
            f, flat, moved = _coordinate_move(prob, flat, angles, f, sl, steps[r])
            steps[r] = min(steps[r] * 1.5, 1.0) if moved else steps[r] * 0.5
        if f - f_start < cfg.tol and steps.max() < MIN_STEP:
            break
    return f, flat


def _epigraph_ascent(prob: _Problem, flat, angles, f, cfg: OptimizerConfig):
    """SLSQP on ``max t s.t. t <= D b(p)`` with exact gradients; kept only if it improves."""
    rows = _row_slices(prob)
    n = len(flat)
    A = np.zeros((len(rows), n + 1))
    for i, sl in enumerate(rows):
        A[i, sl] = 1.0
    memo = {}

    def pieces(x):
        key = x[:n].tobytes()
        if key not in memo:
            memo.clear()
            memo[key] = prob.pieces_and_grad(np.clip(x[:n], 0.0, 1.0), angles)
        return memo[key]

    def cons(x):
        return pieces(x)[0] - x[n]

    def cons_jac(x):
        return np.hstack([pieces(x)[1], -np.ones((3, 1))])

    x0 = np.append(flat, pieces(np.append(flat, 0.0))[0].min())
    with np.errstate(all="ignore"):
        res = scipy.optimize.minimize(
            lambda x: -x[n], x0, jac=lambda x: np.append(np.zeros(n), -1.0), method="SLSQP",
            bounds=[(0.0, 1.0)] * n + [(None, None)],
            constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac},
                         {"type": "eq", "fun": lambda x: A @ x - 1.0, "jac": lambda x: A}],
            options={"maxiter": cfg.max_iters, "ftol": 1e-10},
        )
    cand = flat.copy()
    for sl in rows:
        cand[sl] = project_simplex(res.x[sl])
    if not np.all(np.isfinite(cand)):
        return f, flat, False
    fc = prob.objective(cand, angles)
    return ((fc, cand) if fc > f else (f, flat)) + (bool(res.success),)


def _local_search(prob: _Problem, flat: np.ndarray, angles: np.ndarray, cfg: OptimizerConfig):
    f = prob.objective(flat, angles)
    angle_step = 0.5
    for _ in range(cfg.max_iters):
        f_start = f
        f, flat, converged = _epigraph_ascent(prob, flat, angles, f, cfg)
        if not converged:
            # SLSQP stopped early (degenerate line search, boundary log terms)
            f, flat = _coordinate_ascent(prob, flat, angles, f, cfg, POLISH_STEP)
        if angles.size and angle_step > MIN_STEP:
            res = scipy.optimize.minimize(
                lambda a: -prob.objective(flat, a), angles, method="Nelder-Mead",
                options={"maxfev": 40 * angles.size, "xatol": 1e-6, "fatol": 1e-10,
                         "initial_simplex": _simplex_around(angles, angle_step)},
            )
            if -res.fun > f + 1e-15:
                angles, f = res.x, -res.fun
            else:
                angle_step *= 0.5
        if f - f_start < cfg.tol and (not angles.size or angle_step <= MIN_STEP):
            break
    return f, flat, angles


def _simplex_around(x: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([x] + [x + step * e for e in np.eye(len(x))])


def _run_restart(prob: _Problem, cfg: OptimizerConfig, k: int):
    rng = make_rng(cfg.seed, k)
    flat, angles = _initial(prob, rng, k)
    f, flat, angles = _local_search(prob, flat, angles, cfg)
    return f, k, flat, angles


def maximize_weighted_rate(kind, channel, lam: float, cfg: OptimizerConfig = OptimizerConfig(),
                           theta=None, zeta=None) -> ParetoPoint:
    """Best ``lam*R1 + (1-lam)*R2`` over ensembles of region ``kind``.

    The per-ensemble value is taken at the lam-optimal vertex of the
    pentagon; restarts are merged by maximum with ties going to the lowest
    restart index.
    """
    kind = rg.RegionKind(kind)
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"config error: lambda must lie in [0, 1], got {lam}")
    if kind is rg.RegionKind.NONE_COMMON:
        raise ConfigError("config error: the common-message region has no two-rate frontier")
    space = _resolve_space(kind, channel, cfg, theta, zeta)
    prob = _Problem(space, lam)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(lambda k: _run_restart(prob, cfg, k), range(cfg.restarts)))
    else:
        results = [_run_restart(prob, cfg, k) for k in range(cfg.restarts)]
    f, k, flat, angles = max(results, key=lambda r: (r[0], -r[1]))
    ens = prob.ensemble(flat, angles)
    bounds = rg.eval_region(kind, channel, ens)
    r1, r2 = rg.corner(bounds, lam)
    obj = lam * r1 + (1 - lam) * r2
    if abs(obj - f) > 1e-8 or not rg.in_region(bounds, r1, r2):
        raise ConsistencyError(f"optimizer point failed re-validation ({obj!r} vs {f!r})")
    return ParetoPoint(lam, r1, r2, obj, bounds, ens, k)


def pareto_frontier(kind, channel, lambdas: Sequence[float], cfg: OptimizerConfig = OptimizerConfig(),
                    theta=None, zeta=None) -> list[ParetoPoint]:
    """One weighted maximization per lambda, sorted by R1, dominated points removed."""
    pts = [maximize_weighted_rate(kind, channel, float(l), cfg, theta, zeta) for l in lambdas]
    return upper_envelope(pts)


def upper_envelope(pts: list[ParetoPoint], tol: float = 1e-12) -> list[ParetoPoint]:
    keep = []
    for p in pts:
        dominated = any(
            (q.r1 >= p.r1 - tol and q.r2 >= p.r2 - tol) and (q.r1 > p.r1 + tol or q.r2 > p.r2 + tol)
            for q in pts
        )
        duplicate = any(abs(q.r1 - p.r1) <= tol and abs(q.r2 - p.r2) <= tol for q in keep)
        if not dominated and not duplicate:
            keep.append(p)
    return sorted(keep, key=lambda p: (p.r1, -p.r2, p.lam))


def with_cards(cfg: OptimizerConfig, **cards) -> OptimizerConfig:
    return replace(cfg, **cards)
