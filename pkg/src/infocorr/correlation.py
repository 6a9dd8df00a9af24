"""Pearson correlation, correlation ratio and (conditional) maximal correlation.

Maximal correlation is computed from the singular values of the normalized
matrix ``Q(x, y) = P(x, y) / sqrt(P(x) P(y))``: the largest singular value is
always 1 and the second one is the maximal correlation.  The conditional
version takes the largest such value over the slices ``P(x, y | u)`` with
positive weight.  ``max_correlation_ace`` is an independent oracle based on
alternating conditional expectations and never touches an SVD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, UnsupportedSupport
from .probability import ConditionedJoint, JointPmf, tv_distance

SV_SELF_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class CorrelationReport:
    pearson: float
    theta_x_given_y: float
    theta_y_given_x: float
    max_corr: float
    achieving_u: int | None = None
    degenerate: bool = False


@dataclass(frozen=True)
class SmoothQuery:
    epsilon: float
    restarts: int = 8
    max_iter: int = 300
    step_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class SmoothResult:
    value: float
    q_joint: np.ndarray
    tv: float
    certified: bool


# -- Pearson / correlation ratio --------------------------------------------


def _moments(probs: np.ndarray, xv: np.ndarray, yv: np.ndarray) -> tuple[float, float, float]:
    px = probs.sum(axis=1)
    py = probs.sum(axis=0)
    mx = px @ xv
    my = py @ yv
    var_x = px @ (xv - mx) ** 2
    var_y = py @ (yv - my) ** 2
    cov = (xv - mx) @ probs @ (yv - my)
    return float(cov), float(max(0.0, var_x)), float(max(0.0, var_y))


def _ratio(num: float, den: float) -> float:
    if den <= 0:
        return 0.0
    return num / den


def pearson(p: JointPmf) -> float:
    cov, vx, vy = _moments(p.probs, p.x_embedding(), p.y_embedding())
    if vx * vy <= 0:
        return 0.0
    return float(np.clip(cov / math.sqrt(vx * vy), -1.0, 1.0))


def conditional_moments(cj: ConditionedJoint) -> tuple[float, float, float]:
    """(E cov(X,Y|U), E var(X|U), E var(Y|U)) under the shared embeddings."""
    ref = cj.slices[0]
    xv, yv = ref.x_embedding(), ref.y_embedding()
    cov = vx = vy = 0.0
    for w, s in zip(cj.u_weights, cj.slices):
        c, a, b = _moments(s.probs, xv, yv)
        cov += w * c
        vx += w * a
        vy += w * b
    return cov, vx, vy


def pearson_given(cj: ConditionedJoint) -> float:
    """E[cov(X,Y|U)] / sqrt(E[var(X|U)] E[var(Y|U)])."""
    cov, vx, vy = conditional_moments(cj)
    if vx * vy <= 0:
        return 0.0
    return float(np.clip(cov / math.sqrt(vx * vy), -1.0, 1.0))


def _explained_and_total(probs: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    """(var(E[X|Y]), var(X)) with X indexed by rows of ``probs``."""
    px = probs.sum(axis=1)
    py = probs.sum(axis=0)
    mean = px @ values
    total = px @ (values - mean) ** 2
    keep = py > 0
    cond_mean = (values @ probs[:, keep]) / py[keep]
    explained = py[keep] @ (cond_mean - mean) ** 2
    return float(max(0.0, explained)), float(max(0.0, total))


def correlation_ratio(p: JointPmf, direction: str = "x_on_y") -> float:
    """sqrt(var(E[X|Y]) / var(X)) for ``x_on_y``; the mirror image for ``y_on_x``."""
    if direction == "x_on_y":
        explained, total = _explained_and_total(p.probs, p.x_embedding())
    elif direction == "y_on_x":
        explained, total = _explained_and_total(p.probs.T, p.y_embedding())
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return float(min(math.sqrt(_ratio(explained, total)), 1.0))


def correlation_ratio_given(cj: ConditionedJoint, direction: str = "x_on_y") -> float:
    """sqrt(E[var(E[X|YU]|U)] / E[var(X|U)]), the pooled conditional ratio."""
    explained = total = 0.0
    for w, s in zip(cj.u_weights, cj.slices):
        if direction == "x_on_y":
            e, t = _explained_and_total(s.probs, s.x_embedding())
        elif direction == "y_on_x":
            e, t = _explained_and_total(s.probs.T, s.y_embedding())
        else:
            raise ValueError(f"unknown direction {direction!r}")
        explained += w * e
        total += w * t
    return float(min(math.sqrt(_ratio(explained, total)), 1.0))


# -- maximal correlation ----------------------------------------------------


def normalized_matrix(probs: np.ndarray) -> np.ndarray:
    """Q restricted to symbols with positive marginal mass."""
    px = probs.sum(axis=1)
    py = probs.sum(axis=0)
    rows = px > 0
    cols = py > 0
    sub = probs[np.ix_(rows, cols)]
    return sub / np.sqrt(np.outer(px[rows], py[cols]))


def singular_values(probs: np.ndarray) -> np.ndarray:
    """Descending singular values of Q, clamped to [0, 1]."""
    q = normalized_matrix(np.asarray(probs, dtype=float))
    s = np.linalg.svd(q, compute_uv=False)
    if abs(s[0] - 1.0) > SV_SELF_CHECK_TOL:
        raise ArithmeticError(f"largest singular value {s[0]!r} is not 1")
    return np.clip(s, 0.0, 1.0)


def _slice_max_corr(probs: np.ndarray) -> tuple[float, bool]:
    px = probs.sum(axis=1)
    py = probs.sum(axis=0)
    if np.count_nonzero(px) < 2 or np.count_nonzero(py) < 2:
        return 0.0, True
    return float(singular_values(probs)[1]), False


def max_correlation(p: JointPmf | np.ndarray) -> float:
    probs = p.probs if isinstance(p, JointPmf) else np.asarray(p, dtype=float)
    return _slice_max_corr(probs)[0]


def cond_max_correlation(cj: ConditionedJoint) -> tuple[float, int]:
    """Largest slice maximal correlation and the slice index achieving it."""
    vals = [max_correlation(s) for s in cj.slices]
    best = int(np.argmax(vals))
    return float(vals[best]), best


def correlation_report(obj: JointPmf | ConditionedJoint) -> CorrelationReport:
    if isinstance(obj, ConditionedJoint):
        rho, u = cond_max_correlation(obj)
        degenerate = all(_slice_max_corr(s.probs)[1] for s in obj.slices)
        return CorrelationReport(
            pearson=pearson_given(obj),
            theta_x_given_y=correlation_ratio_given(obj, "x_on_y"),
            theta_y_given_x=correlation_ratio_given(obj, "y_on_x"),
            max_corr=rho,
            achieving_u=u,
            degenerate=degenerate,
        )
    rho, degenerate = _slice_max_corr(obj.probs)
    return CorrelationReport(
        pearson=pearson(obj),
        theta_x_given_y=correlation_ratio(obj, "x_on_y"),
        theta_y_given_x=correlation_ratio(obj, "y_on_x"),
        max_corr=rho,
        degenerate=degenerate,
    )


def max_correlation_ace(
    p: JointPmf | np.ndarray,
    restarts: int = 16,
    max_iter: int = 500,
    tol: float = 1e-10,
    seed: int = 0,
) -> float:
    """Maximal correlation by alternating conditional expectations.

    Starting from a random f(X), repeat g <- E[f(X)|Y], f <- E[g(Y)|X], each
    centred and scaled to unit variance, until the correlation E[f g] stops
    moving.  The best of several random starts is returned.
    """
    probs = p.probs if isinstance(p, JointPmf) else np.asarray(p, dtype=float)
    px = probs.sum(axis=1)
    py = probs.sum(axis=0)
    rows = px > 0
    cols = py > 0
    if rows.sum() < 2 or cols.sum() < 2:
        return 0.0
    probs = probs[np.ix_(rows, cols)]
    px, py = px[rows], py[cols]
    x_given_y = probs / py            # column y holds P(x|y)
    y_given_x = probs / px[:, None]   # row x holds P(y|x)

    def standardize(v: np.ndarray, w: np.ndarray) -> np.ndarray | None:
        v = v - w @ v
        sd = math.sqrt(max(0.0, w @ v**2))
        if sd < 1e-300:
            return None
        return v / sd

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        f = standardize(rng.standard_normal(px.size), px)
        if f is None:
            continue
        rho_prev = -1.0
        rho = 0.0
        for _ in range(max_iter):
            g = standardize(f @ x_given_y, py)
            if g is None:
                rho = 0.0
                break
            f_new = y_given_x @ g
            rho = float(f @ probs @ g)
            f = standardize(f_new, px)
            if f is None:
                break
            if abs(rho - rho_prev) < tol:
                break
            rho_prev = rho
        best = max(best, rho)
    return float(min(max(0.0, best), 1.0))


# -- TV perturbation bound --------------------------------------------------


def _as_joint(obj: ConditionedJoint | np.ndarray) -> np.ndarray:
    if isinstance(obj, ConditionedJoint):
        return obj.joint()
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 3:
        raise ShapeMismatch("expected a ConditionedJoint or an array indexed [x, y, u]")
    return arr


def tv_perturbation_bound(
    p_cj: ConditionedJoint | np.ndarray, q_cj: ConditionedJoint | np.ndarray
) -> tuple[float, float]:
    """Both sides of (rho_P - 4 d / P_m) / (1 + 4 d / P_m) <= rho_Q.

    ``d`` is the largest slice-wise TV distance over the u with P(u) > 0 and
    ``P_m`` the smallest positive P(x, y | u).  Q must put no mass on cells
    where P is zero.
    """
    pj = _as_joint(p_cj)
    qj = _as_joint(q_cj)
    if pj.shape != qj.shape:
        raise ShapeMismatch(f"shapes differ: {pj.shape} vs {qj.shape}")
    pw = pj.sum(axis=(0, 1))
    qw = qj.sum(axis=(0, 1))
    if np.any((pw == 0) & (qw > 0)):
        raise UnsupportedSupport("Q has mass on a slice where P has none")
    delta = 0.0
    p_min = math.inf
    rho_p = 0.0
    for u in np.flatnonzero(pw > 0):
        ps = pj[:, :, u] / pw[u]
        if np.any((ps == 0) & (qj[:, :, u] > 0)):
            raise UnsupportedSupport(f"Q has mass outside the support of P in slice {u}")
        pos = ps[ps > 0]
        p_min = min(p_min, float(pos.min()))
        rho_p = max(rho_p, max_correlation(ps))
        if qw[u] > 0:
            delta = max(delta, tv_distance(ps, qj[:, :, u] / qw[u]))
        else:
            delta = max(delta, 1.0)
    if not p_min > 0 or not math.isfinite(p_min):
        raise UnsupportedSupport("P has no positive cells")
    rho_q = max((max_correlation(qj[:, :, u] / qw[u]) for u in np.flatnonzero(qw > 0)), default=0.0)
    r = 4.0 * delta / p_min
    return (rho_p - r) / (1.0 + r), rho_q


# -- smooth maximal correlation ---------------------------------------------


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    k = idx[cond][-1]
    return np.maximum(v - css[cond][-1] / k, 0.0)


def _project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    if np.abs(v).sum() <= radius:
        return v
    return np.sign(v) * _project_simplex_scaled(np.abs(v), radius)


def _project_simplex_scaled(a: np.ndarray, radius: float) -> np.ndarray:
    return radius * _project_simplex(a / radius)


def project_tv_ball(q: np.ndarray, center: np.ndarray, eps: float, iters: int = 200) -> np.ndarray:
    """Projection onto {Q in simplex : TV(Q, center) <= eps} by Dykstra's method."""
    x = q.ravel().astype(float)
    c = center.ravel()
    p_inc = np.zeros_like(x)
    q_inc = np.zeros_like(x)
    for _ in range(iters):
        y = _project_simplex(x + p_inc)
        p_inc = x + p_inc - y
        x_new = c + _project_l1_ball(y + q_inc - c, 2.0 * eps)
        q_inc = y + q_inc - x_new
        if np.abs(x_new - x).max() < 1e-15:
            x = x_new
            break
        x = x_new
    # The L1 step may leave tiny negatives / mass drift; clean up inside the ball.
    x = np.maximum(x, 0.0)
    x /= x.sum()
    return x.reshape(q.shape)


def _slice_sigma_and_grad(sl: np.ndarray) -> tuple[float, np.ndarray]:
    """Second singular value of the normalized slice and its gradient w.r.t. the slice."""
    grad = np.zeros_like(sl)
    r = sl.sum(axis=1)
    c = sl.sum(axis=0)
    rows = r > 0
    cols = c > 0
    if rows.sum() < 2 or cols.sum() < 2:
        return 0.0, grad
    sub = sl[np.ix_(rows, cols)]
    rr, cc = r[rows], c[cols]
    scale = np.sqrt(np.outer(rr, cc))
    u, s, vt = np.linalg.svd(sub / scale)
    left, right, sig = u[:, 1], vt[1], s[1]
    g = np.outer(left, right) / scale - 0.5 * sig * ((left**2 / rr)[:, None] + (right**2 / cc)[None, :])
    grad[np.ix_(rows, cols)] = g
    return float(sig), grad


def _cond_sigma(joint: np.ndarray) -> float:
    w = joint.sum(axis=(0, 1))
    vals = [max_correlation(joint[:, :, u] / w[u]) for u in range(joint.shape[2]) if w[u] > 0]
    return max(vals, default=0.0)


def _shrink_candidate(pj: np.ndarray, eps: float) -> np.ndarray:
    """Mix each slice toward the product of its marginals, water-filling the TV budget."""
    w = pj.sum(axis=(0, 1))
    live = [u for u in range(pj.shape[2]) if w[u] > 0]
    sig = {}
    cost = {}
    target = {}
    for u in live:
        sl = pj[:, :, u] / w[u]
        prod = np.outer(sl.sum(axis=1), sl.sum(axis=0))
        sig[u] = max_correlation(sl)
        cost[u] = w[u] * tv_distance(sl, prod)
        target[u] = prod

    def spend(level: float) -> float:
        return sum(cost[u] * max(0.0, 1.0 - level / sig[u]) for u in live if sig[u] > 0)

    lo, hi = 0.0, max(sig.values(), default=0.0)
    if spend(lo) <= eps:
        level = 0.0
    else:
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if spend(mid) > eps:
                lo = mid
            else:
                hi = mid
        level = hi
    q = pj.copy()
    for u in live:
        if sig[u] > level:
            t = 1.0 - level / sig[u]
            q[:, :, u] = w[u] * ((1 - t) * pj[:, :, u] / w[u] + t * target[u])
    return q


def _drop_candidates(pj: np.ndarray, eps: float) -> list[np.ndarray]:
    """Remove whole slices (largest correlation first) while the budget allows."""
    w = pj.sum(axis=(0, 1))
    live = [u for u in range(pj.shape[2]) if w[u] > 0]
    order = sorted(live, key=lambda u: -max_correlation(pj[:, :, u] / w[u]))
    out = []
    q = pj.copy()
    spent = 0.0
    for u in order[:-1]:
        if spent + w[u] > eps + 1e-15:
            break
        spent += w[u]
        q = q.copy()
        q[:, :, u] = 0.0
        rest = q.sum()
        q /= rest
        # renormalizing scales the surviving slices jointly; TV equals the removed mass
        out.append(q)
        remaining = eps - tv_distance(q, pj)
        if remaining > 0:
            out.append(_shrink_candidate(q, remaining))
    return out


def smooth_max_correlation(cj: ConditionedJoint | np.ndarray, query: SmoothQuery) -> SmoothResult:
    """Approximate inf of rho_m,Q(X;Y|U) over joints Q within TV ``epsilon`` of P.

    Structured candidates (slice shrinkage toward independence, slice removal)
    seed a multi-start projected subgradient descent on a log-sum-exp
    smoothing of the max over slices.  The result is an upper bound on the
    infimum; ``certified`` is False when the iteration budget ran out.
    """
    pj = _as_joint(cj)
    eps = query.epsilon
    rng = np.random.default_rng(query.seed)

    best_q = pj.copy()
    best_val = _cond_sigma(pj)

    def consider(q: np.ndarray) -> None:
        nonlocal best_q, best_val
        if tv_distance(q, pj) > eps + 1e-12:
            return
        val = _cond_sigma(q)
        if val < best_val - 1e-15:
            best_q, best_val = q, val

    starts = [_shrink_candidate(pj, eps)] + _drop_candidates(pj, eps)
    for c in starts:
        consider(c)
    for _ in range(query.restarts):
        noise = rng.dirichlet(np.ones(pj.size)).reshape(pj.shape)
        starts.append(project_tv_ball(pj + eps * (noise - pj), pj, eps))

    certified = True
    for start in starts[: query.restarts + 1]:
        q = start
        step = 0.05
        prev = _cond_sigma(q)
        converged = False
        for it in range(query.max_iter):
            w = q.sum(axis=(0, 1))
            sig = np.zeros(q.shape[2])
            grads = np.zeros_like(q)
            for u in range(q.shape[2]):
                if w[u] > 1e-300:
                    s, g = _slice_sigma_and_grad(q[:, :, u] / w[u])
                    sig[u] = s
                    # chain rule through the normalization by w[u]
                    grads[:, :, u] = (g - (g * q[:, :, u]).sum() / w[u]) / w[u]
            tau = 1e-3
            live = w > 1e-300
            weights = np.zeros_like(sig)
            weights[live] = np.exp((sig[live] - sig[live].max()) / tau)
            weights /= weights.sum()
            direction = grads * weights
            q_new = project_tv_ball(q - step * direction, pj, eps)
            val = _cond_sigma(q_new)
            if val <= prev:
                if prev - val < query.step_tol:
                    q = q_new
                    converged = True
                    break
                q, prev = q_new, val
                step *= 1.2
            else:
                step *= 0.5
                if step < 1e-8:
                    converged = True
                    break
            consider(q)
        consider(q)
        certified = certified and converged
    return SmoothResult(value=float(best_val), q_joint=best_q, tv=tv_distance(best_q, pj),
                        certified=certified)

