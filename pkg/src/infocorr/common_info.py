"""Generalized common informations.

``solve_c_beta`` evaluates

    C_beta(X;Y) = inf { I(XY;U) : rho_m(X;Y|U) <= beta }

over channels P(u|x,y).  The constraint is a maximum of second singular
values, so the problem is nonconvex and nonsmooth; the solver combines
several local searches and always returns a feasible channel:

* beta = 0: conditional independence is written as P = sum_u w_u a_u b_u^T
  and SLSQP searches over (w, a, b) directly.
* beta > 0: quadratic penalty on the excess singular values, minimized by
  L-BFGS over softmax logits with an escalating weight, then an SLSQP
  polish with the singular value constraint imposed exactly.
* Always-feasible candidates (U = XY, U = X, U = Y, warm starts) cap the
  result from above.

Closed forms for Gaussian pairs and the doubly symmetric binary source live
here too, together with the Gacs-Korner decomposition, the inverse
function beta_C and the normalized measures.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .correlation import cond_max_correlation, max_correlation
from .errors import DomainError, OptimizerBudgetExhausted
from .probability import (
    Channel,
    ConditionedJoint,
    JointPmf,
    attach_condition,
    entropy,
    h2,
    log2_plus,
    mi_xy_u,
)

TINY = 1e-300
LN2 = math.log(2.0)
ENTRY_FLOOR = 1e-12


class Certificate(str, enum.Enum):
    EXACT = "Exact"
    GRID_CERTIFIED = "GridCertified"
    MULTI_START_BEST = "MultiStartBest"


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 32
    u_size: int | None = None           # default |X||Y| + 1
    seed: int = 0
    feasibility_tol: float = 1e-6
    lambda_start: float = 10.0
    lambda_stop: float = 1e6
    lambda_factor: float = 10.0
    inner_iter: int = 2000
    polish_iter: int = 400
    wyner_iter: int = 1000
    grid_resolution: int = 40
    certify: bool = True                # run the grid oracle on 2x2 inputs
    certify_tol: float = 2e-3
    strict: bool = False                # raise when no local search converged


@dataclass(frozen=True)
class CBetaSolution:
    value: float
    channel: Channel
    achieved_constraint: float
    certificate: Certificate
    bounds: tuple[float, float]
    converged: bool = True
    grid_value: float | None = None


@dataclass(frozen=True)
class GaussianPair:
    beta0: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta0 <= 1.0:
            raise DomainError("beta0 must lie in [0, 1]")

    def joint_entropy(self) -> float:
        """Differential entropy h(XY) in bits for unit variances."""
        if self.beta0 >= 1.0:
            return -math.inf
        return 0.5 * math.log2((2 * math.pi * math.e) ** 2 * (1 - self.beta0**2))


@dataclass(frozen=True)
class GkDecomposition:
    component_of_x: np.ndarray
    component_of_y: np.ndarray
    component_masses: np.ndarray
    entropy_bits: float


# -- closed forms -----------------------------------------------------------


def _check_beta(beta: float) -> None:
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")


def gaussian_c_beta(g: GaussianPair | float, beta: float) -> float:
    """1/2 log+ of the ratio of (1+b)/(1-b) odds at beta0 and at beta."""
    beta0 = g.beta0 if isinstance(g, GaussianPair) else float(g)
    if not 0.0 <= beta0 < 1.0:
        raise DomainError("the closed form needs beta0 in [0, 1)")
    _check_beta(beta)
    if beta >= beta0:
        return 0.0
    return 0.5 * log2_plus(((1 + beta0) / (1 - beta0)) / ((1 + beta) / (1 - beta)))


def continuous_lower_bound(h_xy: float, beta0: float, beta: float) -> float:
    """h(XY) - 1/2 log[(2 pi e (1 - beta0))^2 (1 + beta) / (1 - beta)], floored at 0."""
    if not 0.0 <= beta0 < 1.0:
        raise DomainError("beta0 must lie in [0, 1)")
    _check_beta(beta)
    if beta >= beta0:
        return 0.0
    val = h_xy - 0.5 * math.log2((2 * math.pi * math.e * (1 - beta0)) ** 2 * (1 + beta) / (1 - beta))
    return max(0.0, val)


def _dsbs_cells(p0: float, beta: float) -> tuple[float, float]:
    s = math.sqrt((1 - 2 * p0 - beta) / (1 - beta))
    return 0.5 * (1 - p0 + s), 0.5 * (1 - p0 - s)


def dsbs_upper_bound(p0: float, beta: float) -> float:
    """1 + H(p0) - H(a, b, p0/2, p0/2) for the doubly symmetric binary source."""
    if not 0.0 < p0 < 0.5:
        raise DomainError("p0 must lie in (0, 0.5)")
    _check_beta(beta)
    if beta >= 1 - 2 * p0:
        return 0.0
    a, b = _dsbs_cells(p0, beta)
    return max(0.0, 1.0 + h2(p0) - entropy([a, b, p0 / 2, p0 / 2]))


def dsbs_decomposition(p0: float, beta: float) -> ConditionedJoint:
    """U ~ Bern(1/2) with mirrored slices [[a, p0/2], [p0/2, b]]; each slice has rho_m = beta."""
    if not 0.0 < p0 < 0.5:
        raise DomainError("p0 must lie in (0, 0.5)")
    _check_beta(beta)
    vals = np.array([-1.0, 1.0])
    if beta >= 1 - 2 * p0:
        sl = JointPmf(0.5 * np.array([[1 - p0, p0], [p0, 1 - p0]]), vals, vals)
        return attach_condition([1.0], [sl])
    a, b = _dsbs_cells(p0, beta)
    h = p0 / 2
    s0 = JointPmf(np.array([[a, h], [h, b]]), vals, vals)
    s1 = JointPmf(np.array([[b, h], [h, a]]), vals, vals)
    return attach_condition([0.5, 0.5], [s0, s1])


def _dsbs_crossover(p: JointPmf) -> float | None:
    """p0 when ``p`` is a DSBS matrix (up to 1e-12), else None."""
    m = p.probs
    if m.shape != (2, 2):
        return None
    d, o = m[0, 0], m[0, 1]
    if abs(m[1, 1] - d) > 1e-12 or abs(m[1, 0] - o) > 1e-12 or abs(d + o - 0.5) > 1e-12:
        return None
    p0 = 2 * o
    return p0 if 0.0 < p0 < 0.5 else None


# -- Gacs-Korner ------------------------------------------------------------


def gacs_korner(p: JointPmf) -> GkDecomposition:
    """Connected components of the bipartite graph x -- y with P(x, y) > 0."""
    nx, ny = p.shape
    xs, ys = np.nonzero(p.probs > 0)
    graph = coo_matrix((np.ones(xs.size), (xs, nx + ys)), shape=(nx + ny, nx + ny))
    _, raw = connected_components(graph, directed=False)
    # relabel in order of first appearance so ids are stable
    relabel: dict[int, int] = {}
    for lab in raw:
        relabel.setdefault(int(lab), len(relabel))
    labels = np.array([relabel[int(v)] for v in raw])
    cx, cy = labels[:nx], labels[nx:]
    masses = np.zeros(len(relabel))
    np.add.at(masses, cx, p.probs.sum(axis=1))
    return GkDecomposition(cx, cy, masses, entropy(masses))


# -- channel parametrizations ----------------------------------------------


class _FullParam:
    """The channel itself, one row-stochastic block of shape (|X||Y|, |U|)."""

    def __init__(self, m: int, nu: int):
        self.shapes = [(m, nu)]

    def channel(self, blocks: list[np.ndarray]) -> np.ndarray:
        return blocks[0]

    def pullback(self, blocks: list[np.ndarray], gc: np.ndarray) -> list[np.ndarray]:
        return [gc]


class _ProductParam:
    """c((u, v) | x, y) = A(u|x) B(v|y)."""

    def __init__(self, nx: int, ny: int, na: int, nb: int):
        self.nx, self.ny, self.na, self.nb = nx, ny, na, nb
        self.shapes = [(nx, na), (ny, nb)]

    def channel(self, blocks: list[np.ndarray]) -> np.ndarray:
        a, b = blocks
        return np.einsum("xu,yv->xyuv", a, b).reshape(self.nx * self.ny, self.na * self.nb)

    def pullback(self, blocks: list[np.ndarray], gc: np.ndarray) -> list[np.ndarray]:
        a, b = blocks
        g4 = gc.reshape(self.nx, self.ny, self.na, self.nb)
        return [np.einsum("xyuv,yv->xu", g4, b), np.einsum("xyuv,xu->yv", g4, a)]


def _split(vec: np.ndarray, shapes: list[tuple[int, int]]) -> list[np.ndarray]:
    out, i = [], 0
    for r, c in shapes:
        out.append(vec[i:i + r * c].reshape(r, c))
        i += r * c
    return out


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# -- objective and constraint pieces ---------------------------------------


def _objective(kind: str, p: np.ndarray, c: np.ndarray) -> tuple[float, np.ndarray]:
    """I(XY;U) (``mi``) or H(U) (``entropy``) and its gradient w.r.t. the channel."""
    q = p @ c
    lq = np.log2(np.maximum(q, TINY))
    if kind == "mi":
        lc = np.log2(np.maximum(c, TINY))
        diff = lc - lq[None, :]
        return float((p[:, None] * c * diff).sum()), p[:, None] * diff
    if kind == "entropy":
        val = -float((q * lq).sum())
        return val, -p[:, None] * (lq + 1.0 / LN2)[None, :]
    raise ValueError(kind)


def _slice_tensor(p: np.ndarray, c: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """J[u, x, y] = P(x, y) c(u | x, y)."""
    return (p[:, None] * c).T.reshape(c.shape[1], nx, ny)


def _spectrum(j: np.ndarray):
    r = np.maximum(j.sum(axis=2), TINY)
    col = np.maximum(j.sum(axis=1), TINY)
    sr, sc = np.sqrt(r), np.sqrt(col)
    u, s, vt = np.linalg.svd(j / (sr[:, :, None] * sc[:, None, :]))
    return u, s, vt, r, col, sr, sc


def _sigma_grad(spec, k: int) -> np.ndarray:
    """d sigma_k / d J for every slice (rows/columns with no mass get zero)."""
    u, s, vt, r, col, sr, sc = spec
    left, right, sig = u[:, :, k], vt[:, k, :], s[:, k]
    g = left[:, :, None] * right[:, None, :] / (sr[:, :, None] * sc[:, None, :])
    g -= 0.5 * sig[:, None, None] * ((left**2 / r)[:, :, None] + (right**2 / col)[:, None, :])
    live = (r > TINY)[:, :, None] & (col > TINY)[:, None, :]
    return np.where(live, g, 0.0)


def _penalty(j: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """sum_u w_u sum_{k>=2} max(0, sigma_k - beta)^2 and its gradient w.r.t. J."""
    spec = _spectrum(j)
    s = spec[1]
    w = j.sum(axis=(1, 2))
    excess = np.maximum(s[:, 1:] - beta, 0.0)
    val = float((w * (excess**2).sum(axis=1)).sum())
    grad = np.broadcast_to((excess**2).sum(axis=1)[:, None, None], j.shape).copy()
    for k in range(1, s.shape[1]):
        active = excess[:, k - 1] > 0
        if active.any():
            grad += (2 * w * excess[:, k - 1])[:, None, None] * _sigma_grad(spec, k)
    return val, grad


def _constraint(j: np.ndarray, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """w_u (beta - sigma_2(u)) >= 0 per slot, with gradient w.r.t. J (slot, x, y)."""
    spec = _spectrum(j)
    sig = spec[1][:, 1]
    w = j.sum(axis=(1, 2))
    val = w * (beta - sig)
    grad = (beta - sig)[:, None, None] - w[:, None, None] * _sigma_grad(spec, 1)
    return val, grad


# -- local searches --------------------------------------------------------


@dataclass
class _Problem:
    p: np.ndarray          # flattened P(x, y)
    nx: int
    ny: int
    beta: float
    kind: str              # "mi" or "entropy"
    cfg: SolverConfig


def _penalty_search(prob: _Problem, param, z0: np.ndarray) -> tuple[list[np.ndarray], bool]:
    p, nx, ny = prob.p, prob.nx, prob.ny

    def fun(z: np.ndarray, lam: float):
        zb = _split(z, param.shapes)
        blocks = [_softmax_rows(b) for b in zb]
        c = param.channel(blocks)
        val, gc = _objective(prob.kind, p, c)
        pen, gj = _penalty(_slice_tensor(p, c, nx, ny), prob.beta)
        gc = gc + lam * gj.reshape(c.shape[1], -1).T * p[:, None]
        grads = param.pullback(blocks, gc)
        gz = [bl * (g - (bl * g).sum(axis=1, keepdims=True)) for bl, g in zip(blocks, grads)]
        return val + lam * pen, np.concatenate([g.ravel() for g in gz])

    z = z0
    lam = prob.cfg.lambda_start
    ok = True
    while lam <= prob.cfg.lambda_stop * (1 + 1e-12):
        res = minimize(fun, z, args=(lam,), jac=True, method="L-BFGS-B",
                       options={"maxiter": prob.cfg.inner_iter, "gtol": 1e-10, "ftol": 1e-15})
        z = res.x
        ok = res.status != 1   # 1 = iteration limit
        lam *= prob.cfg.lambda_factor
    return [_softmax_rows(b) for b in _split(z, param.shapes)], ok


def _polish(prob: _Problem, param, blocks: list[np.ndarray]) -> tuple[list[np.ndarray], bool]:
    """SLSQP with the singular value constraint imposed exactly."""
    p, nx, ny = prob.p, prob.nx, prob.ny
    shapes = param.shapes
    sizes = [r * c for r, c in shapes]
    n = sum(sizes)

    def unpack(x):
        return _split(x, shapes)

    def fun(x):
        bl = unpack(x)
        c = param.channel(bl)
        val, gc = _objective(prob.kind, p, c)
        return val, np.concatenate([g.ravel() for g in param.pullback(bl, gc)])

    def ineq(x):
        c = param.channel(unpack(x))
        return _constraint(_slice_tensor(p, c, nx, ny), prob.beta)[0]

    def ineq_jac(x):
        bl = unpack(x)
        c = param.channel(bl)
        _, gj = _constraint(_slice_tensor(p, c, nx, ny), prob.beta)
        rows = []
        for u in range(c.shape[1]):
            gc = np.zeros_like(c)
            gc[:, u] = gj[u].ravel() * p
            rows.append(np.concatenate([g.ravel() for g in param.pullback(bl, gc)]))
        return np.array(rows)

    eq_rows = []
    offset = 0
    for r, cdim in shapes:
        for i in range(r):
            row = np.zeros(n)
            row[offset + i * cdim: offset + (i + 1) * cdim] = 1.0
            eq_rows.append(row)
        offset += r * cdim
    eq_mat = np.array(eq_rows)

    x0 = np.concatenate([b.ravel() for b in blocks])
    res = minimize(
        fun, x0, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * n,
        constraints=[
            {"type": "eq", "fun": lambda x: eq_mat @ x - 1.0, "jac": lambda x: eq_mat},
            {"type": "ineq", "fun": ineq, "jac": ineq_jac},
        ],
        options={"maxiter": prob.cfg.polish_iter, "ftol": 1e-14},
    )
    x = np.clip(res.x, 0.0, None)
    return [_renorm_rows(b) for b in unpack(x)], bool(res.success)


def _wyner_search(prob: _Problem, nu: int, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    """Minimize I(XY;U) with P = sum_u w_u a_u b_u^T over (w, a, b)."""
    nx, ny = prob.nx, prob.ny
    target = prob.p.reshape(nx, ny)
    nv = nu + nu * nx + nu * ny

    def split(z):
        return z[:nu], z[nu:nu + nu * nx].reshape(nu, nx), z[nu + nu * nx:].reshape(nu, ny)

    def xlogx(v):
        return np.where(v > 0, v * np.log2(np.maximum(v, TINY)), 0.0)

    def dxlogx(v):
        return np.log2(np.maximum(v, TINY)) + 1.0 / LN2

    def obj(z):
        # -(sum_u w_u (H(a_u) + H(b_u))); I = H(P) + obj
        w, a, b = split(z)
        ha = -xlogx(a).sum(axis=1)
        hb = -xlogx(b).sum(axis=1)
        grad = np.concatenate([-(ha + hb), (w[:, None] * dxlogx(a)).ravel(),
                               (w[:, None] * dxlogx(b)).ravel()])
        return -float((w * (ha + hb)).sum()), grad

    def ceq(z):
        w, a, b = split(z)
        m = np.einsum("u,ux,uy->xy", w, a, b)
        return np.concatenate([(m - target).ravel()[:-1], [w.sum() - 1.0],
                               a.sum(axis=1) - 1.0, b.sum(axis=1) - 1.0])

    fixed_rows = np.zeros((1 + 2 * nu, nv))
    fixed_rows[0, :nu] = 1.0
    for u in range(nu):
        fixed_rows[1 + u, nu + u * nx: nu + (u + 1) * nx] = 1.0
        fixed_rows[1 + nu + u, nu + nu * nx + u * ny: nu + nu * nx + (u + 1) * ny] = 1.0

    def ceq_jac(z):
        w, a, b = split(z)
        jw = np.einsum("ux,uy->xyu", a, b).reshape(nx * ny, nu)
        ja = np.zeros((nx, ny, nu, nx))
        jb = np.zeros((nx, ny, nu, ny))
        for x in range(nx):
            ja[x, :, :, x] = (w[:, None] * b).T
        for y in range(ny):
            jb[:, y, :, y] = (w[:, None] * a).T
        top = np.hstack([jw, ja.reshape(nx * ny, -1), jb.reshape(nx * ny, -1)])[:-1]
        return np.vstack([top, fixed_rows])

    z0 = np.concatenate([rng.dirichlet(np.ones(nu)), rng.dirichlet(np.ones(nx), nu).ravel(),
                         rng.dirichlet(np.ones(ny), nu).ravel()])
    res = minimize(obj, z0, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * nv,
                   constraints=[{"type": "eq", "fun": ceq, "jac": ceq_jac}],
                   options={"maxiter": prob.cfg.wyner_iter, "ftol": 1e-14})
    w, a, b = split(np.clip(res.x, 0.0, None))
    joint = np.einsum("u,ux,uy->xyu", w, a, b).reshape(nx * ny, nu)
    c = np.zeros((nx * ny, nu))
    live = prob.p > 0
    c[live] = joint[live] / np.maximum(joint[live].sum(axis=1, keepdims=True), TINY)
    c[~live, 0] = 1.0
    bad = c.sum(axis=1) <= 0
    c[bad, 0] = 1.0
    return c, bool(res.success)


# -- candidate bookkeeping -------------------------------------------------


def _renorm_rows(c: np.ndarray) -> np.ndarray:
    c = np.where(c < ENTRY_FLOOR, 0.0, c)
    s = c.sum(axis=1, keepdims=True)
    empty = s[:, 0] <= 0
    c[empty, 0] = 1.0
    s[empty] = 1.0
    return c / s


@dataclass
class _Candidate:
    value: float
    achieved: float
    channel: Channel


def _assess(prob: _Problem, p: JointPmf, rows: np.ndarray) -> _Candidate | None:
    """Exact value and constraint of a channel; None when infeasible."""
    rows = _renorm_rows(np.asarray(rows, dtype=float))
    keep = rows.sum(axis=0) > 0
    rows = rows[:, keep]
    ch = Channel(rows, prob.nx, prob.ny)
    cj = ch.apply(p)
    achieved, _ = cond_max_correlation(cj)
    if achieved > prob.beta + prob.cfg.feasibility_tol:
        return None
    value = mi_xy_u(cj) if prob.kind == "mi" else entropy(cj.u_weights)
    return _Candidate(value, achieved, ch)


def _trivial_channels(nx: int, ny: int) -> list[np.ndarray]:
    m = nx * ny
    to_x = np.zeros((m, nx))
    to_y = np.zeros((m, ny))
    for x in range(nx):
        for y in range(ny):
            to_x[x * ny + y, x] = 1.0
            to_y[x * ny + y, y] = 1.0
    return [to_x, to_y, np.eye(m)]


def _gk_channel(p: JointPmf) -> np.ndarray:
    gk = gacs_korner(p)
    nx, ny = p.shape
    rows = np.zeros((nx * ny, gk.component_masses.size))
    for x in range(nx):
        for y in range(ny):
            rows[x * ny + y, gk.component_of_x[x]] = 1.0
    return rows


def _logits_near(rows: np.ndarray, nu: int, floor: float = 1e-3) -> np.ndarray:
    padded = np.zeros((rows.shape[0], nu))
    padded[:, : rows.shape[1]] = rows
    return np.log(_renorm_rows(padded + floor)).ravel()


def _random_logits(rng: np.random.Generator, shapes) -> np.ndarray:
    return np.concatenate([2.0 * rng.standard_normal(r * c) for r, c in shapes])


def _search(
    prob: _Problem,
    p: JointPmf,
    param,
    extra: Sequence[np.ndarray],
    use_wyner: bool,
    seeds: Sequence[np.ndarray] = (),
) -> tuple[_Candidate, bool]:
    """Run all local searches plus the given candidate channels; return the best feasible one.

    ``seeds`` are logit vectors replacing the random start of the first restarts.
    """
    candidates: list[_Candidate | None] = [_assess(prob, p, r) for r in extra]
    converged = False
    children = np.random.SeedSequence(prob.cfg.seed).spawn(prob.cfg.restarts)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        if use_wyner:
            c, ok = _wyner_search(prob, param.shapes[0][1], rng)
            candidates.append(_assess(prob, p, c))
            converged |= ok
            continue
        z0 = _random_logits(rng, param.shapes) if i >= len(seeds) else seeds[i]
        blocks, ok = _penalty_search(prob, param, z0)
        first = _assess(prob, p, param.channel(blocks))
        candidates.append(first)
        converged |= ok
        if first is not None:
            continue
        # the penalty leaves a small violation; impose the constraint exactly
        if isinstance(param, _FullParam):
            # negligible slots only add constraints
            c = _renorm_rows(blocks[0])
            c = _renorm_rows(c[:, prob.p @ c > 1e-7])
            sub = _FullParam(c.shape[0], c.shape[1])
            polished, ok2 = _polish(prob, sub, [c])
            candidates.append(_assess(prob, p, sub.channel(polished)))
        else:
            polished, ok2 = _polish(prob, param, blocks)
            candidates.append(_assess(prob, p, param.channel(polished)))
        converged |= ok2
    best = None
    for cand in candidates:
        if cand is not None and (best is None or cand.value < best.value - 1e-15):
            best = cand
    assert best is not None, "the identity channel is always feasible"
    return best, converged


# -- public solvers ---------------------------------------------------------


def _prepare(p: JointPmf, beta: float, kind: str, cfg: SolverConfig | None) -> _Problem:
    _check_beta(beta)
    cfg = cfg or SolverConfig()
    return _Problem(p.probs.ravel().copy(), p.x_size, p.y_size, float(beta), kind, cfg)


def c_beta_bounds(p: JointPmf, beta: float) -> tuple[float, float]:
    """Analytic bracket: Gacs-Korner below (beta < 1), min(H(X), H(Y)) or the DSBS bound above."""
    if beta >= max_correlation(p):
        return 0.0, 0.0
    lower = gacs_korner(p).entropy_bits if beta < 1 else 0.0
    upper = min(entropy(p.probs.sum(axis=1)), entropy(p.probs.sum(axis=0)))
    p0 = _dsbs_crossover(p)
    if p0 is not None:
        upper = min(upper, dsbs_upper_bound(p0, beta))
    return lower, upper


def solve_c_beta(
    p: JointPmf,
    beta: float,
    cfg: SolverConfig | None = None,
    warm_start: Sequence[Channel] = (),
) -> CBetaSolution:
    """Best feasible channel found for inf I(XY;U) subject to rho_m(X;Y|U) <= beta."""
    prob = _prepare(p, beta, "mi", cfg)
    cfg = prob.cfg
    nx, ny = p.shape
    if beta >= max_correlation(p):
        return CBetaSolution(0.0, Channel.constant(nx, ny), max_correlation(p), Certificate.EXACT,
                             (0.0, 0.0))
    nu = cfg.u_size or nx * ny + 1
    gk = _gk_channel(p)
    extra = _trivial_channels(nx, ny) + [gk] + [
        w.rows for w in warm_start if w.x_size == nx and w.y_size == ny and w.u_size <= nx * ny + 1
    ]
    # a disconnected support pins sigma_2 at 1 under constant U, where the
    # penalty has no useful gradient; start one search from the common part
    seeds = [_logits_near(gk, nu)] if gk.shape[1] > 1 and gk.shape[1] <= nu else []
    best, converged = _search(prob, p, _FullParam(nx * ny, nu), extra, beta == 0.0, seeds)
    bounds = c_beta_bounds(p, beta)
    certificate = Certificate.MULTI_START_BEST
    grid = None
    if cfg.certify and p.shape == (2, 2):
        grid = grid_oracle_c_beta(p, beta, cfg.grid_resolution)
        if abs(best.value - grid) <= cfg.certify_tol:
            certificate = Certificate.GRID_CERTIFIED
    sol = CBetaSolution(best.value, best.channel, best.achieved, certificate, bounds, converged, grid)
    if cfg.strict and not converged:
        raise OptimizerBudgetExhausted("no local search converged", best=sol)
    return sol


def c_beta_curve(p: JointPmf, betas: Sequence[float], cfg: SolverConfig | None = None) -> list[CBetaSolution]:
    """Solve along ascending betas, offering each solution to the next as a warm start.

    A channel feasible at a smaller beta stays feasible at a larger one, so the
    returned values are nonincreasing.
    """
    order = np.argsort(betas, kind="stable")
    out: list[CBetaSolution | None] = [None] * len(betas)
    warm: list[Channel] = []
    for i in order:
        sol = solve_c_beta(p, float(betas[i]), cfg, warm_start=warm)
        out[i] = sol
        warm = [sol.channel]
    return out  # type: ignore[return-value]


def k_beta_single_letter_upper(p: JointPmf, beta: float, cfg: SolverConfig | None = None) -> float:
    """min H(U) over channels with rho_m(X;Y|U) <= beta (the one-letter restriction)."""
    prob = _prepare(p, beta, "entropy", cfg)
    nx, ny = p.shape
    if beta >= max_correlation(p):
        return 0.0
    extra = _trivial_channels(nx, ny) + [_gk_channel(p)]
    if beta == 0.0:
        wyner = solve_c_beta(p, 0.0, SolverConfig(**{**prob.cfg.__dict__, "certify": False}))
        extra.append(wyner.channel.rows)
        # the penalty is too stiff at beta = 0; rely on the structured candidates
        feasible = [c for c in (_assess(prob, p, r) for r in extra) if c is not None]
        return min(c.value for c in feasible)
    nu = prob.cfg.u_size or nx * ny + 1
    best, _ = _search(prob, p, _FullParam(nx * ny, nu), extra, use_wyner=False)
    return best.value


def solve_c_beta_distributed_ub(
    p: JointPmf,
    beta: float,
    cfg: SolverConfig | None = None,
    sizes: tuple[int, int] | None = None,
) -> float:
    """inf I(XY;UV) over product channels P(u|x) P(v|y) with rho_m(X;Y|UV) <= beta."""
    prob = _prepare(p, beta, "mi", cfg)
    nx, ny = p.shape
    if beta >= max_correlation(p):
        return 0.0
    na, nb = sizes or (nx + 1, ny + 1)
    param = _ProductParam(nx, ny, na, nb)
    to_x, to_y, ident = _trivial_channels(nx, ny)
    best, _ = _search(prob, p, param, [to_x, to_y, ident], use_wyner=False)
    return best.value


@functools.lru_cache(maxsize=512)
def _cached_c_beta(key: bytes, shape: tuple[int, int], beta: float, cfg: SolverConfig) -> float:
    probs = np.frombuffer(key, dtype=float).reshape(shape)
    return solve_c_beta(JointPmf(probs), beta, cfg).value


def beta_c_inverse(p: JointPmf, c: float, cfg: SolverConfig | None = None, tol: float = 1e-3) -> float:
    """Smallest beta with C_beta <= c, by bisection (tolerance ``tol`` on beta)."""
    if c < 0:
        raise DomainError("capacity must be nonnegative")
    rho = max_correlation(p)
    if c == 0:
        return rho
    cfg = cfg or SolverConfig()
    cfg = SolverConfig(**{**cfg.__dict__, "certify": False})

    def value(beta: float) -> float:
        return _cached_c_beta(p.probs.tobytes(), p.shape, round(beta, 12), cfg)

    slack = 1e-9
    if c >= entropy(p.probs) or value(0.0) <= c + slack:
        return 0.0
    lo, hi = 0.0, rho
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if value(mid) <= c + slack:
            hi = mid
        else:
            lo = mid
    return hi


def gamma_normalizations(
    p: JointPmf, beta: float, cfg: SolverConfig | None = None, value: float | None = None
) -> tuple[float, float]:
    """(C_beta / H(XY), 1 - 2^(-2 C_beta)); ``value`` skips the solve when already known."""
    c = solve_c_beta(p, beta, cfg).value if value is None else float(value)
    if c <= 0:
        return 0.0, 0.0
    h = entropy(p.probs)
    return min(c / h, 1.0), 1.0 - 2.0 ** (-2.0 * c)


# -- grid oracle (2x2 only) -------------------------------------------------


def _h_bin(v: np.ndarray) -> np.ndarray:
    v = np.clip(v, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -np.where(v > 0, v * np.log2(v), 0.0) - np.where(v < 1, (1 - v) * np.log2(1 - v), 0.0)
    return t


def _h_cells(*cells: np.ndarray) -> np.ndarray:
    out = 0.0
    for v in cells:
        v = np.maximum(v, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = out - np.where(v > 0, v * np.log2(v), 0.0)
    return out


def _grid_wyner(p: np.ndarray, k: int, u_max: int) -> float:
    """min I(XY;U) over product decompositions with |U| <= u_max on a 1/k grid."""
    hp = entropy(p)
    px0, py0, p00 = p[0].sum(), p[:, 0].sum(), p[0, 0]
    g = np.arange(k + 1) / k
    eps = 1e-12
    best = math.inf

    # |U| = 2: grid over (w, alpha1); alpha2 from the x marginal; gammas solved exactly.
    w = g[1:-1][:, None]
    a1 = g[None, :]
    a2 = (px0 - w * a1) / (1 - w)
    # w a1 g1 + (1-w) a2 g2 = p00 ;  w g1 + (1-w) g2 = py0
    det = w * (1 - w) * (a1 - a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = ((1 - w) * (p00 - a2 * py0)) / det
        g2 = (w * (a1 * py0 - p00)) / det
    ok = (np.abs(det) > 1e-14) & (a2 >= -eps) & (a2 <= 1 + eps)
    ok &= (g1 >= -eps) & (g1 <= 1 + eps) & (g2 >= -eps) & (g2 <= 1 + eps)
    if ok.any():
        hc = w * (_h_bin(a1) + _h_bin(g1)) + (1 - w) * (_h_bin(a2) + _h_bin(g2))
        best = min(best, hp - float(np.where(ok, hc, -np.inf).max()))
    if u_max < 3:
        return best

    # |U| = 3: grid over the weight simplex, alpha1, alpha2 and gamma1.
    A1, A2, G1 = np.meshgrid(g, g, g, indexing="ij")
    A1, A2, G1 = A1.ravel(), A2.ravel(), G1.ravel()
    for i in range(1, k):
        for j in range(1, k - i):
            w1, w2 = i / k, j / k
            w3 = 1.0 - w1 - w2
            a3 = (px0 - w1 * A1 - w2 * A2) / w3
            r1 = p00 - w1 * A1 * G1
            r2 = py0 - w1 * G1
            # w2 a2 g2 + w3 a3 g3 = r1 ; w2 g2 + w3 g3 = r2
            det = w2 * w3 * (A2 - a3)
            with np.errstate(divide="ignore", invalid="ignore"):
                g2 = w3 * (r1 - a3 * r2) / det
                g3 = w2 * (A2 * r2 - r1) / det
            ok = (np.abs(det) > 1e-14) & (a3 >= -eps) & (a3 <= 1 + eps)
            ok &= (g2 >= -eps) & (g2 <= 1 + eps) & (g3 >= -eps) & (g3 <= 1 + eps)
            if not ok.any():
                continue
            hc = (w1 * (_h_bin(A1) + _h_bin(G1)) + w2 * (_h_bin(A2) + _h_bin(g2))
                  + w3 * (_h_bin(a3) + _h_bin(g3)))
            best = min(best, hp - float(np.where(ok, hc, -np.inf).max()))
    return best


def _rho_2x2(s00, s01, s10, s11):
    r0, r1 = s00 + s01, s10 + s11
    c0, c1 = s00 + s10, s01 + s11
    den = np.sqrt(np.maximum(r0 * r1 * c0 * c1, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, np.abs(s00 * s11 - s01 * s10) / den, 0.0)


def _grid_two_slices(p: np.ndarray, beta: float, k: int) -> float:
    """min I(XY;U) over P = w S1 + (1-w) S2 with both slice rho_m <= beta, S1 on a 1/k grid."""
    hp = entropy(p)
    idx = [(a, b, c) for a in range(k + 1) for b in range(k + 1 - a) for c in range(k + 1 - a - b)]
    s = np.array(idx, dtype=float) / k
    s00, s01, s10 = s[:, 0], s[:, 1], s[:, 2]
    s11 = 1.0 - s00 - s01 - s10
    h1 = _h_cells(s00, s01, s10, s11)
    ok1 = _rho_2x2(s00, s01, s10, s11) <= beta + 1e-12
    best = math.inf
    for i in range(1, k):
        w = i / k
        t00 = (p[0, 0] - w * s00) / (1 - w)
        t01 = (p[0, 1] - w * s01) / (1 - w)
        t10 = (p[1, 0] - w * s10) / (1 - w)
        t11 = (p[1, 1] - w * s11) / (1 - w)
        ok = ok1 & (t00 >= -1e-12) & (t01 >= -1e-12) & (t10 >= -1e-12) & (t11 >= -1e-12)
        if not ok.any():
            continue
        t00, t01, t10, t11 = (np.maximum(t, 0.0) for t in (t00, t01, t10, t11))
        ok &= _rho_2x2(t00, t01, t10, t11) <= beta + 1e-12
        if not ok.any():
            continue
        hc = w * h1 + (1 - w) * _h_cells(t00, t01, t10, t11)
        best = min(best, hp - float(np.where(ok, hc, -np.inf).max()))
    return best


def grid_oracle_c_beta(p: JointPmf, beta: float, resolution: int = 40) -> float:
    """Exhaustive grid value of C_beta for a 2x2 pmf (an upper bound on the infimum).

    beta = 0 searches product decompositions with up to three slots; beta > 0
    adds two-slot decompositions whose slices each satisfy the constraint.
    """
    if p.shape != (2, 2):
        raise DomainError("the grid oracle only handles 2x2 pmfs")
    _check_beta(beta)
    if beta >= max_correlation(p):
        return 0.0
    probs = p.probs
    best = _grid_wyner(probs, resolution, 3 if beta == 0 else 2)
    if beta > 0:
        best = min(best, _grid_two_slices(probs, beta, resolution))
    return max(0.0, best)
