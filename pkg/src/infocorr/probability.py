"""Finite-alphabet probability kernel.

Containers for joint pmfs over X x Y, their U-conditioned decompositions and
channels P(u|x,y), plus entropy / mutual information / total variation and the
JSON distribution file format used by the CLI.

All logarithms are base 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NotNormalized, ParseError, ShapeMismatch

NORMALIZATION_TOL = 1e-12
FILE_NORMALIZATION_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _renormalize(probs: np.ndarray, tol: float) -> np.ndarray:
    if not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite")
    if np.any(probs < 0):
        raise ValueError("probabilities must be nonnegative")
    total = probs.sum()
    if abs(total - 1.0) > tol:
        raise NotNormalized(f"probabilities sum to {total!r}, not 1")
    # Leave values within summation noise untouched so that
    # construction is idempotent (needed for exact file round-trips).
    if abs(total - 1.0) > 8 * np.finfo(float).eps * max(probs.size, 1):
        probs = probs / total
    return probs


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint pmf ``probs[x, y]`` with optional real embeddings of each symbol."""

    probs: np.ndarray
    x_values: np.ndarray | None = None
    y_values: np.ndarray | None = None
    x_labels: tuple[str, ...] | None = None
    y_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] < 1 or probs.shape[1] < 1:
            raise ShapeMismatch(f"expected a nonempty 2-D matrix, got shape {probs.shape}")
        probs = _renormalize(probs, NORMALIZATION_TOL)
        object.__setattr__(self, "probs", _frozen(probs))
        for name, size in (("x_values", probs.shape[0]), ("y_values", probs.shape[1])):
            vals = getattr(self, name)
            if vals is not None:
                vals = np.asarray(vals, dtype=float)
                if vals.shape != (size,):
                    raise ShapeMismatch(f"{name} must have length {size}")
                if not np.all(np.isfinite(vals)):
                    raise ValueError(f"{name} must be finite")
                object.__setattr__(self, name, _frozen(vals))
        for name, size in (("x_labels", probs.shape[0]), ("y_labels", probs.shape[1])):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(str(s) for s in labels)
                if len(labels) != size:
                    raise ShapeMismatch(f"{name} must have length {size}")
                object.__setattr__(self, name, labels)

    @property
    def x_size(self) -> int:
        return self.probs.shape[0]

    @property
    def y_size(self) -> int:
        return self.probs.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def x_embedding(self) -> np.ndarray:
        """Numeric value of each x symbol (symbol index when none was given)."""
        if self.x_values is None:
            return np.arange(self.x_size, dtype=float)
        return self.x_values

    def y_embedding(self) -> np.ndarray:
        if self.y_values is None:
            return np.arange(self.y_size, dtype=float)
        return self.y_values

    def with_probs(self, probs: np.ndarray) -> JointPmf:
        """Same alphabets and embeddings, different probabilities."""
        return JointPmf(probs, self.x_values, self.y_values, self.x_labels, self.y_labels)

    def __repr__(self) -> str:
        return f"JointPmf(shape={self.shape}, probs={self.probs.tolist()})"


@dataclass(frozen=True, eq=False)
class ConditionedJoint:
    """P_XYU stored as P_U plus one slice P_{XY|U=u} per positive-weight u."""

    u_weights: np.ndarray
    slices: tuple[JointPmf, ...]

    def __post_init__(self) -> None:
        w = np.asarray(self.u_weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ShapeMismatch("u_weights must be a nonempty vector")
        if w.size != len(self.slices):
            raise ShapeMismatch("one slice per positive-weight u is required")
        object.__setattr__(self, "u_weights", _frozen(w))
        object.__setattr__(self, "slices", tuple(self.slices))

    @property
    def x_size(self) -> int:
        return self.slices[0].x_size

    @property
    def y_size(self) -> int:
        return self.slices[0].y_size

    @property
    def u_size(self) -> int:
        return len(self.slices)

    def joint(self) -> np.ndarray:
        """Array ``P[x, y, u]``."""
        return np.stack([w * s.probs for w, s in zip(self.u_weights, self.slices)], axis=-1)

    def xy_marginal(self) -> JointPmf:
        probs = sum(w * s.probs for w, s in zip(self.u_weights, self.slices))
        return self.slices[0].with_probs(probs)


def attach_condition(pmf_u: Sequence[float], slices: Sequence[JointPmf]) -> ConditionedJoint:
    """Build a ConditionedJoint, dropping slices whose weight is zero."""
    w = np.asarray(pmf_u, dtype=float)
    if w.ndim != 1 or w.size != len(slices):
        raise ShapeMismatch(f"{w.size} weights for {len(slices)} slices")
    if len(slices) == 0:
        raise ShapeMismatch("at least one slice is required")
    w = _renormalize(w, NORMALIZATION_TOL)
    ref = slices[0]
    for s in slices[1:]:
        if s.shape != ref.shape:
            raise ShapeMismatch(f"slice shapes differ: {s.shape} vs {ref.shape}")
        for a, b in ((s.x_values, ref.x_values), (s.y_values, ref.y_values)):
            if (a is None) != (b is None) or (a is not None and not np.array_equal(a, b)):
                raise ShapeMismatch("slices must share numeric embeddings")
    keep = [i for i in range(w.size) if w[i] > 0]
    kept = w[keep]
    return ConditionedJoint(kept, tuple(slices[i] for i in keep))


def condition_from_joint(joint: np.ndarray, like: JointPmf | None = None) -> ConditionedJoint:
    """Split an array ``P[x, y, u]`` into weights and per-u slices."""
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 3:
        raise ShapeMismatch("expected an array indexed [x, y, u]")
    w = joint.sum(axis=(0, 1))
    slices = []
    for u in range(joint.shape[2]):
        if w[u] > 0:
            sl = joint[:, :, u] / w[u]
            slices.append(like.with_probs(sl) if like is not None else JointPmf(sl))
        else:
            slices.append(None)
    keep = [u for u in range(w.size) if w[u] > 0]
    kept = _renormalize(w[keep], 1e-9)
    return ConditionedJoint(kept, tuple(slices[u] for u in keep))


def flatten(cj: ConditionedJoint) -> JointPmf:
    """Joint pmf over (X x Y) x U; rows are xy pairs in row-major order."""
    return JointPmf(cj.joint().reshape(cj.x_size * cj.y_size, cj.u_size))


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic map: ``rows[k, u] = P(u | (x, y))`` with k = x * y_size + y."""

    rows: np.ndarray
    x_size: int
    y_size: int

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != self.x_size * self.y_size:
            raise ShapeMismatch(f"channel needs {self.x_size * self.y_size} rows, got {rows.shape}")
        if np.any(rows < 0) or not np.all(np.isfinite(rows)):
            raise ValueError("channel entries must be finite and nonnegative")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > NORMALIZATION_TOL):
            raise NotNormalized("every channel row must sum to 1")
        object.__setattr__(self, "rows", _frozen(rows))

    @property
    def u_size(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def constant(cls, x_size: int, y_size: int) -> Channel:
        return cls(np.ones((x_size * y_size, 1)), x_size, y_size)

    @classmethod
    def identity(cls, x_size: int, y_size: int) -> Channel:
        return cls(np.eye(x_size * y_size), x_size, y_size)

    def apply(self, p: JointPmf) -> ConditionedJoint:
        """The decomposition of ``p`` induced by sending (X, Y) through the channel."""
        if p.shape != (self.x_size, self.y_size):
            raise ShapeMismatch("channel and pmf alphabets differ")
        joint = p.probs.reshape(-1, 1) * self.rows
        return condition_from_joint(joint.reshape(self.x_size, self.y_size, -1), like=p)


def marginals(p: JointPmf) -> tuple[np.ndarray, np.ndarray]:
    return p.probs.sum(axis=1), p.probs.sum(axis=0)


def entropy(v: np.ndarray | Sequence[float]) -> float:
    """Shannon entropy in bits; zero cells contribute nothing."""
    v = np.asarray(v, dtype=float).ravel()
    nz = v[v > 0]
    h = -float(np.sum(nz * np.log2(nz)))
    return max(0.0, h)


def mutual_information(p: JointPmf) -> float:
    px, py = marginals(p)
    val = entropy(px) + entropy(py) - entropy(p.probs)
    return max(0.0, val)


def mi_xy_u(cj: ConditionedJoint) -> float:
    """I(XY;U) = H(XY) - sum_u P(u) H(XY | U=u)."""
    h_cond = sum(w * entropy(s.probs) for w, s in zip(cj.u_weights, cj.slices))
    return max(0.0, entropy(cj.xy_marginal().probs) - h_cond)


def tv_distance(p: JointPmf | np.ndarray, q: JointPmf | np.ndarray) -> float:
    a = p.probs if isinstance(p, JointPmf) else np.asarray(p, dtype=float)
    b = q.probs if isinstance(q, JointPmf) else np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot compare shapes {a.shape} and {b.shape}")
    return min(0.5 * float(np.abs(a - b).sum()), 1.0)


# -- distribution files -----------------------------------------------------


def _reject_constant(name: str) -> float:
    raise ParseError(f"non-finite number {name} in distribution file")


def _check_matrix(raw: object) -> np.ndarray:
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise ParseError("'probs' must be a nonempty array of arrays")
    widths = {len(r) for r in raw}
    if len(widths) != 1 or 0 in widths:
        raise ParseError("'probs' rows must have equal nonzero length")
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"'probs' must contain numbers: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise ParseError("'probs' contains non-finite entries")
    if np.any(arr < 0):
        raise ParseError("'probs' contains negative entries")
    if abs(arr.sum() - 1.0) > FILE_NORMALIZATION_TOL:
        raise ParseError(f"'probs' sums to {arr.sum()!r}, not 1")
    return arr


def pmf_from_record(rec: dict) -> JointPmf:
    if not isinstance(rec, dict) or "probs" not in rec:
        raise ParseError("distribution record needs a 'probs' field")
    probs = _check_matrix(rec["probs"])
    nx, ny = probs.shape
    kwargs: dict = {}
    for key, size in (("x_labels", nx), ("y_labels", ny)):
        labels = rec.get(key)
        if labels is None:
            labels = [str(i) for i in range(size)]
        if not isinstance(labels, list) or len(labels) != size:
            raise ParseError(f"'{key}' must be an array of {size} strings")
        kwargs[key] = tuple(str(s) for s in labels)
    for key, size in (("x_values", nx), ("y_values", ny)):
        vals = rec.get(key)
        if vals is None:
            continue
        if not isinstance(vals, list) or len(vals) != size:
            raise ParseError(f"'{key}' must be an array of {size} reals")
        try:
            arr = np.array(vals, dtype=float)
        except (TypeError, ValueError):
            raise ParseError(f"'{key}' must contain numbers") from None
        if not np.all(np.isfinite(arr)):
            raise ParseError(f"'{key}' contains non-finite entries")
        kwargs[key] = arr
    try:
        return JointPmf(probs, **kwargs)
    except (ValueError, NotNormalized, ShapeMismatch) as exc:
        raise ParseError(str(exc)) from None


def pmf_to_record(p: JointPmf) -> dict:
    rec: dict = {
        "x_labels": list(p.x_labels) if p.x_labels else [str(i) for i in range(p.x_size)],
        "y_labels": list(p.y_labels) if p.y_labels else [str(i) for i in range(p.y_size)],
    }
    if p.x_values is not None:
        rec["x_values"] = [float(v) for v in p.x_values]
    if p.y_values is not None:
        rec["y_values"] = [float(v) for v in p.y_values]
    rec["probs"] = [[float(v) for v in row] for row in p.probs]
    return rec


def conditioned_from_record(rec: dict) -> ConditionedJoint:
    """``{"u_weights": [...], "slices": [<distribution record>, ...]}``."""
    if not isinstance(rec, dict) or "u_weights" not in rec or "slices" not in rec:
        raise ParseError("conditioned record needs 'u_weights' and 'slices'")
    w = rec["u_weights"]
    if not isinstance(w, list) or not isinstance(rec["slices"], list):
        raise ParseError("'u_weights' and 'slices' must be arrays")
    slices = [pmf_from_record(s) for s in rec["slices"]]
    try:
        w_arr = np.array(w, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("'u_weights' must contain numbers") from None
    if not np.all(np.isfinite(w_arr)) or np.any(w_arr < 0):
        raise ParseError("'u_weights' must be finite and nonnegative")
    try:
        w_arr = _renormalize(w_arr, FILE_NORMALIZATION_TOL)
    except NotNormalized:
        raise ParseError("'u_weights' must sum to 1") from None
    try:
        return attach_condition(w_arr, slices)
    except (ShapeMismatch, NotNormalized) as exc:
        raise ParseError(str(exc)) from None


def conditioned_to_record(cj: ConditionedJoint) -> dict:
    return {"u_weights": [float(w) for w in cj.u_weights],
            "slices": [pmf_to_record(s) for s in cj.slices]}


def loads(text: str) -> JointPmf | ConditionedJoint:
    try:
        rec = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if isinstance(rec, dict) and "u_weights" in rec:
        return conditioned_from_record(rec)
    return pmf_from_record(rec)


def dumps(obj: JointPmf | ConditionedJoint) -> str:
    rec = conditioned_to_record(obj) if isinstance(obj, ConditionedJoint) else pmf_to_record(obj)
    return json.dumps(rec, indent=2, allow_nan=False) + "\n"


def load(path: str | Path) -> JointPmf | ConditionedJoint:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads(text)


def save(obj: JointPmf | ConditionedJoint, path: str | Path) -> None:
    Path(path).write_text(dumps(obj))


# -- common constructors ----------------------------------------------------


def dsbs(p0: float, signed: bool = True) -> JointPmf:
    """Doubly symmetric binary source with crossover ``p0`` (+-1 embeddings by default)."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("crossover probability must lie in [0, 1]")
    probs = 0.5 * np.array([[1 - p0, p0], [p0, 1 - p0]])
    vals = np.array([-1.0, 1.0]) if signed else None
    return JointPmf(probs, vals, vals)


def product_pmf(px: Sequence[float], py: Sequence[float]) -> JointPmf:
    return JointPmf(np.outer(px, py))


def h2(p: float) -> float:
    return entropy([p, 1.0 - p])


def log2_plus(x: float) -> float:
    return max(0.0, math.log2(x)) if x > 0 else 0.0
