"""Distributed subgradient descent driven by push-sum mixing.

Each agent privately holds one convex term f_i and the network minimizes
the average f = (1/n) sum_i f_i.  A step first moves every agent's mass
against its local subgradient, evaluated at the agent's current ratio
estimate, and then mixes through the column-stochastic weights:

    x(t+1) = W(t) [ x(t) - alpha(t) g(t) ],    y(t+1) = W(t) y(t),

with g_i(t) a subgradient of f_i at z_i(t) = x_i(t) / y_i(t).  Ratios
track the running network average of the descent iterates, so with a
divergent-but-square-summable stepsize every agent's weighted running
average approaches an optimum of f.

Objectives are built from three term families (squared distance, absolute
deviation, hinge) plus an all-zero placeholder; each declares a certified
optimum and a subgradient-norm ceiling on a bounding box, and the run loop
aborts loudly if a trajectory ever leaves the box or a subgradient beats
the declared ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .pushsum import NetworkState, SMatrix, build_s_matrix, consensus_error, initial_state, ratio_state
from .weights import WeightMatrix

__all__ = [
    "QuadraticTerm",
    "AbsoluteTerm",
    "HingeTerm",
    "ZeroTerm",
    "ObjectiveTerm",
    "ObjectiveSpec",
    "StepsizeSchedule",
    "ScheduleReport",
    "RunTrace",
    "subgradient",
    "quadratic_objective",
    "l1_objective",
    "hinge_objective",
    "zero_objective",
    "grid_minimize",
    "stepsize",
    "stepsize_array",
    "validate_schedule",
    "pushsub_step",
    "pushsub_step_ratio",
    "run_push_subgradient",
    "weighted_running_average",
    "optimality_gap",
]

GAP_NOISE_TOL = 1e-12


# --------------------------------------------------------------------------
# objective terms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticTerm:
    """f(z) = ||z - target||^2, subgradient 2 (z - target)."""

    target: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_1d(np.asarray(self.target, dtype=float))
        a.setflags(write=False)
        object.__setattr__(self, "target", a)

    def value(self, z: np.ndarray) -> float:
        return float(((np.asarray(z, dtype=float) - self.target) ** 2).sum())

    def value_batch(self, zs: np.ndarray) -> np.ndarray:
        return ((zs - self.target) ** 2).sum(axis=1)

    def subgrad(self, z: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(z, dtype=float) - self.target)

    def grad_norm_bound(self, lo: np.ndarray, hi: np.ndarray) -> float:
        # The gradient norm is maximized at a box corner.
        reach = np.maximum(np.abs(lo - self.target), np.abs(hi - self.target))
        return 2.0 * float(np.sqrt((reach ** 2).sum()))


@dataclass(frozen=True)
class AbsoluteTerm:
    """f(z) = sum_c |z_c - target_c|; at a kink the flat subgradient 0 is used."""

    target: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_1d(np.asarray(self.target, dtype=float))
        a.setflags(write=False)
        object.__setattr__(self, "target", a)

    def value(self, z: np.ndarray) -> float:
        return float(np.abs(np.asarray(z, dtype=float) - self.target).sum())

    def value_batch(self, zs: np.ndarray) -> np.ndarray:
        return np.abs(zs - self.target).sum(axis=1)

    def subgrad(self, z: np.ndarray) -> np.ndarray:
        # np.sign maps the kink z_c == target_c to 0, a valid subgradient.
        return np.sign(np.asarray(z, dtype=float) - self.target)

    def grad_norm_bound(self, lo: np.ndarray, hi: np.ndarray) -> float:
        return float(math.sqrt(self.target.shape[0]))


@dataclass(frozen=True)
class HingeTerm:
    """f(z) = max(0, 1 - label * normal . z).

    On the active side the subgradient is -label * normal; at the kink and
    on the flat side it is 0.
    """

    normal: np.ndarray
    label: float

    def __post_init__(self) -> None:
        w = np.atleast_1d(np.asarray(self.normal, dtype=float))
        w.setflags(write=False)
        object.__setattr__(self, "normal", w)
        if self.label not in (-1.0, 1.0):
            raise ValueError(f"label must be -1 or +1, got {self.label}")

    def value(self, z: np.ndarray) -> float:
        margin = 1.0 - self.label * float(self.normal @ np.asarray(z, dtype=float))
        return max(0.0, margin)

    def value_batch(self, zs: np.ndarray) -> np.ndarray:
        return np.maximum(0.0, 1.0 - self.label * (zs @ self.normal))

    def subgrad(self, z: np.ndarray) -> np.ndarray:
        margin = 1.0 - self.label * float(self.normal @ np.asarray(z, dtype=float))
        if margin > 0.0:
            return -self.label * self.normal
        return np.zeros_like(self.normal)

    def grad_norm_bound(self, lo: np.ndarray, hi: np.ndarray) -> float:
        return float(np.sqrt((self.normal ** 2).sum()))


@dataclass(frozen=True)
class ZeroTerm:
    """Identically-zero objective term (useful for pure-consensus runs)."""

    d: int

    def value(self, z: np.ndarray) -> float:
        return 0.0

    def value_batch(self, zs: np.ndarray) -> np.ndarray:
        return np.zeros(zs.shape[0])

    def subgrad(self, z: np.ndarray) -> np.ndarray:
        return np.zeros(self.d)

    def grad_norm_bound(self, lo: np.ndarray, hi: np.ndarray) -> float:
        return 0.0


ObjectiveTerm = Union[QuadraticTerm, AbsoluteTerm, HingeTerm, ZeroTerm]
_TERM_TYPES = (QuadraticTerm, AbsoluteTerm, HingeTerm, ZeroTerm)


def subgradient(term: ObjectiveTerm, point: np.ndarray) -> np.ndarray:
    """A subgradient of one term at the given point."""
    if not isinstance(term, _TERM_TYPES):
        raise TypeError(f"not an objective term: {term!r}")
    return term.subgrad(point)


# --------------------------------------------------------------------------
# network objective
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectiveSpec:
    """The network objective f = (1/n) sum_i f_i with its certified optimum.

    ``terms[i]`` belongs to agent i.  ``g_bound`` upper-bounds every
    agent's subgradient norm on the box [box_lo, box_hi]; ``z_star`` and
    ``f_star`` are a certified minimizer and minimum value, with
    ``optimum_provenance`` recording how they were obtained
    ("analytic-mean", "analytic-median", "grid", or "zero").
    """

    d: int
    terms: tuple[ObjectiveTerm, ...]
    g_bound: float
    box_lo: np.ndarray
    box_hi: np.ndarray
    z_star: np.ndarray
    f_star: float
    optimum_provenance: str

    def __post_init__(self) -> None:
        for name in ("box_lo", "box_hi", "z_star"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if v.shape != (self.d,):
                raise ValueError(f"{name} must have shape ({self.d},)")
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if not self.terms:
            raise ValueError("objective needs at least one term")

    @property
    def n(self) -> int:
        return len(self.terms)

    def value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return sum(term.value(z) for term in self.terms) / self.n

    def value_batch(self, zs: np.ndarray) -> np.ndarray:
        total = np.zeros(zs.shape[0])
        for term in self.terms:
            total += term.value_batch(zs)
        return total / self.n

    def agent_subgradients(self, zs: np.ndarray) -> np.ndarray:
        """Stack g_i = subgradient of f_i at z_i; zs has shape (n, d)."""
        zs = np.atleast_2d(np.asarray(zs, dtype=float))
        if zs.shape != (self.n, self.d):
            raise ValueError(f"expected ratios of shape ({self.n}, {self.d})")
        return np.stack([t.subgrad(zs[i]) for i, t in enumerate(self.terms)])

    def contains(self, z: np.ndarray, slack: float = 1e-9) -> bool:
        z = np.asarray(z, dtype=float)
        return bool((z >= self.box_lo - slack).all() and (z <= self.box_hi + slack).all())


def _default_box(targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = targets.min(axis=0)
    hi = targets.max(axis=0)
    pad = 4.0 * (1.0 + (hi - lo)) + 12.0
    return lo - pad, hi + pad


def _finish_spec(
    terms: tuple[ObjectiveTerm, ...],
    d: int,
    box: tuple[np.ndarray, np.ndarray],
    g_bound: float | None,
    z_star: np.ndarray,
    f_star: float,
    provenance: str,
) -> ObjectiveSpec:
    lo, hi = (np.asarray(b, dtype=float) * np.ones(d) for b in box)
    if not (lo < hi).all():
        raise ValueError("bounding box must have box_lo < box_hi")
    auto_g = max(t.grad_norm_bound(lo, hi) for t in terms)
    g = auto_g if g_bound is None else float(g_bound)
    if g < 0:
        raise ValueError("g_bound must be nonnegative")
    return ObjectiveSpec(
        d=d, terms=terms, g_bound=g, box_lo=lo, box_hi=hi,
        z_star=np.asarray(z_star, dtype=float), f_star=float(f_star),
        optimum_provenance=provenance,
    )


def quadratic_objective(
    targets: np.ndarray,
    box: tuple[np.ndarray, np.ndarray] | None = None,
    g_bound: float | None = None,
) -> ObjectiveSpec:
    """Each agent pulls toward its own target; the optimum is their mean."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    d = targets.shape[1]
    if box is None:
        box = _default_box(targets)
    terms = tuple(QuadraticTerm(a) for a in targets)
    z_star = targets.mean(axis=0)
    f_star = sum(t.value(z_star) for t in terms) / len(terms)
    return _finish_spec(terms, d, box, g_bound, z_star, f_star, "analytic-mean")


def l1_objective(
    targets: np.ndarray,
    box: tuple[np.ndarray, np.ndarray] | None = None,
    g_bound: float | None = None,
) -> ObjectiveSpec:
    """Absolute deviations from per-agent targets; optimum is the
    coordinatewise median (midpoint convention for even counts)."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    d = targets.shape[1]
    if box is None:
        box = _default_box(targets)
    terms = tuple(AbsoluteTerm(a) for a in targets)
    z_star = np.median(targets, axis=0)
    f_star = sum(t.value(z_star) for t in terms) / len(terms)
    return _finish_spec(terms, d, box, g_bound, z_star, f_star, "analytic-median")


def hinge_objective(
    normals: np.ndarray,
    labels: Sequence[float],
    box: tuple[np.ndarray, np.ndarray],
    g_bound: float | None = None,
) -> ObjectiveSpec:
    """Per-agent hinge losses; the optimum is certified by a grid search
    over the (mandatory) box, so only d <= 2 is supported."""
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    d = normals.shape[1]
    labels = [float(b) for b in labels]
    if len(labels) != normals.shape[0]:
        raise ValueError("need one label per normal")
    terms = tuple(HingeTerm(w, b) for w, b in zip(normals, labels))

    lo, hi = (np.asarray(b, dtype=float) * np.ones(d) for b in box)

    def batch(zs: np.ndarray) -> np.ndarray:
        total = np.zeros(zs.shape[0])
        for t in terms:
            total += t.value_batch(zs)
        return total / len(terms)

    z_star, f_star = grid_minimize(batch, lo, hi)
    return _finish_spec(terms, d, box, g_bound, z_star, f_star, "grid")


def zero_objective(n: int, d: int) -> ObjectiveSpec:
    """All terms identically zero: pure consensus with a trivial optimum."""
    terms = tuple(ZeroTerm(d) for _ in range(n))
    inf = np.full(d, np.inf)
    return ObjectiveSpec(
        d=d, terms=terms, g_bound=0.0, box_lo=-inf, box_hi=inf,
        z_star=np.zeros(d), f_star=0.0, optimum_provenance="zero",
    )


def grid_minimize(
    fun_batch: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    points: int = 81,
    refinements: int = 24,
) -> tuple[np.ndarray, float]:
    """Dense-grid minimization with repeated zoom, for d <= 2.

    Each round evaluates a ``points``-per-axis grid on the current box and
    shrinks the box to one cell around the best point; since the objective
    families used here are Lipschitz, the value converges geometrically in
    the number of rounds.  Returns (argmin, min value).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
    hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
    d = lo.shape[0]
    if d > 2:
        raise ValueError("grid oracle only supports d <= 2")
    outer_lo, outer_hi = lo.copy(), hi.copy()
    best_z = (lo + hi) / 2.0
    best_f = float(fun_batch(best_z[None, :])[0])
    for _ in range(refinements):
        axes = [np.linspace(lo[c], hi[c], points) for c in range(d)]
        if d == 1:
            grid = axes[0][:, None]
        else:
            ga, gb = np.meshgrid(axes[0], axes[1], indexing="ij")
            grid = np.column_stack([ga.ravel(), gb.ravel()])
        vals = fun_batch(grid)
        k = int(np.argmin(vals))
        if vals[k] < best_f:
            best_f = float(vals[k])
            best_z = grid[k].copy()
        cell = (hi - lo) / (points - 1)
        lo = np.maximum(outer_lo, grid[k] - cell)
        hi = np.minimum(outer_hi, grid[k] + cell)
    return best_z, best_f


def optimality_gap(objective: ObjectiveSpec, point: np.ndarray) -> float:
    """f(point) - f*; tiny negative rounding noise is clipped to zero.

    A gap below -1e-12 means the declared optimum is beaten and therefore
    wrong, which raises instead of being masked.
    """
    gap = objective.value(point) - objective.f_star
    if gap < -GAP_NOISE_TOL:
        raise ValueError(
            f"point beats the declared optimum by {-gap:.3e}; "
            f"certified f* (provenance {objective.optimum_provenance!r}) is invalid"
        )
    return max(gap, 0.0)


# --------------------------------------------------------------------------
# stepsize schedules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StepsizeSchedule:
    """Stepsize rule alpha(t).

    kinds: ``harmonic`` a/(t+1); ``polynomial`` a/(t+1)**p with p >= 0;
    ``fixed`` the constant 1/sqrt(T) defined only for t < T.
    """

    kind: str
    a: float = 1.0
    p: float = 1.0
    T: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("harmonic", "polynomial", "fixed"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind in ("harmonic", "polynomial") and self.a <= 0:
            raise ValueError("scale a must be positive")
        if self.kind == "polynomial" and self.p < 0:
            raise ValueError("exponent p must be nonnegative (stepsizes may not grow)")
        if self.kind == "fixed":
            if self.T is None or self.T < 1:
                raise ValueError("fixed schedule needs a horizon T >= 1")

    @classmethod
    def harmonic(cls, a: float = 1.0) -> "StepsizeSchedule":
        return cls(kind="harmonic", a=a)

    @classmethod
    def polynomial(cls, a: float, p: float) -> "StepsizeSchedule":
        return cls(kind="polynomial", a=a, p=p)

    @classmethod
    def fixed_horizon(cls, T: int) -> "StepsizeSchedule":
        return cls(kind="fixed", T=T)


def stepsize(schedule: StepsizeSchedule, t: int) -> float:
    """alpha(t); for a fixed schedule, t must stay below its horizon."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if schedule.kind == "harmonic":
        return schedule.a / (t + 1)
    if schedule.kind == "polynomial":
        return schedule.a / (t + 1) ** schedule.p
    assert schedule.T is not None
    if t >= schedule.T:
        raise ValueError(
            f"fixed schedule is defined for t < T={schedule.T}, got t={t}"
        )
    return 1.0 / math.sqrt(schedule.T)


def stepsize_array(schedule: StepsizeSchedule, steps: int) -> np.ndarray:
    """alpha(0..steps-1) as a vector."""
    return np.array([stepsize(schedule, t) for t in range(steps)])


@dataclass(frozen=True)
class ScheduleReport:
    """Divergence/decay classification of a schedule."""

    kind: str
    assumption: str          # "satisfied" | "violated" | "not-applicable"
    sum_alpha: str           # "divergent" | "convergent"
    sum_alpha_sq: str
    nonincreasing_ok: bool
    note: str


def validate_schedule(schedule: StepsizeSchedule, spot_check_steps: int = 10_000) -> ScheduleReport:
    """Classify whether the decay conditions for a time-varying stepsize hold.

    The classification (sum alpha divergent, sum alpha^2 finite) is made
    symbolically from the schedule family; monotone nonincrease is also
    spot-checked over the first ``spot_check_steps`` values.  Fixed
    schedules are a different regime and report "not-applicable".
    """
    vals = stepsize_array(schedule, min(spot_check_steps, schedule.T or spot_check_steps))
    noninc = bool((np.diff(vals) <= 0).all()) and bool((vals > 0).all())
    if schedule.kind == "fixed":
        return ScheduleReport(
            kind="fixed", assumption="not-applicable",
            sum_alpha="divergent", sum_alpha_sq="divergent",
            nonincreasing_ok=noninc,
            note="constant 1/sqrt(T) over a declared horizon",
        )
    if schedule.kind == "harmonic":
        p = 1.0
    else:
        p = schedule.p
    sum_a = "divergent" if p <= 1.0 else "convergent"
    sum_sq = "convergent" if p > 0.5 else "divergent"
    ok = sum_a == "divergent" and sum_sq == "convergent" and noninc
    note = "" if ok else f"p={p} breaks the decay window (need 1/2 < p <= 1)"
    return ScheduleReport(
        kind=schedule.kind,
        assumption="satisfied" if ok else "violated",
        sum_alpha=sum_a, sum_alpha_sq=sum_sq,
        nonincreasing_ok=noninc, note=note,
    )


# --------------------------------------------------------------------------
# the optimization step and run loop
# --------------------------------------------------------------------------

def pushsub_step(
    state: NetworkState,
    w: WeightMatrix,
    alpha: float,
    objective: ObjectiveSpec,
) -> NetworkState:
    """One descent-then-mix step; with alpha == 0 it is exactly a pure
    mixing step (bitwise, since the subtraction is skipped)."""
    if alpha < 0:
        raise ValueError(f"stepsize must be nonnegative, got {alpha}")
    if w.n != state.n:
        raise ValueError(f"weight matrix is {w.n}x{w.n} but state has n={state.n}")
    if objective.n != state.n or objective.d != state.d:
        raise ValueError(
            f"objective is for (n, d)=({objective.n}, {objective.d}), "
            f"state has ({state.n}, {state.d})"
        )
    if alpha == 0.0:
        inner = state.x
    else:
        z = ratio_state(state)
        inner = state.x - alpha * objective.agent_subgradients(z)
    return NetworkState(t=state.t + 1, x=w.entries @ inner, y=w.entries @ state.y)


def pushsub_step_ratio(
    z: np.ndarray,
    y: np.ndarray,
    w: WeightMatrix,
    alpha: float,
    objective: ObjectiveSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """The same step written on the ratios:  z' = S (z - alpha g / y).

    Algebraically identical to running :func:`pushsub_step` on x = z * y,
    up to floating-point reassociation; useful as a cross-check that the
    companion chain really does govern the ratio dynamics.
    """
    if alpha < 0:
        raise ValueError(f"stepsize must be nonnegative, got {alpha}")
    z = np.atleast_2d(np.asarray(z, dtype=float))
    y = np.asarray(y, dtype=float)
    s = build_s_matrix(w, y)
    g = objective.agent_subgradients(z)
    z_next = s.entries @ (z - alpha * g / y[:, None])
    y_next = w.entries @ y
    return z_next, y_next


@dataclass
class RunTrace:
    """Everything recorded along one optimization run.

    Row t (0 <= t < steps) describes the state *before* step t is applied
    together with the stepsize used by that step; the post-run state is
    kept separately in ``final_state``.  ``deviation[t]`` is the largest
    distance of any next-step ratio from the network mean of the descended
    values h_j(t) = x_j(t) - alpha(t) g_j(t), i.e. the one-step consensus
    deviation the contraction envelope is meant to dominate.
    ``s_product_gap[t]`` is the max-entry distance of the companion
    product S(t)...S(0) from its rank-one limit.
    """

    n: int
    d: int
    steps: int
    alphas: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray
    gs: np.ndarray
    zbar: np.ndarray
    zlyap: np.ndarray
    consensus: np.ndarray
    running_gap: np.ndarray
    deviation: np.ndarray
    final_state: NetworkState
    final_zlyap: np.ndarray
    min_y: float
    s_product_gap: np.ndarray | None = None
    smatrices: list[SMatrix] | None = None
    meta: dict = field(default_factory=dict)


def run_push_subgradient(
    ws: Sequence[WeightMatrix],
    x0: np.ndarray,
    objective: ObjectiveSpec,
    schedule: StepsizeSchedule,
    record_products: bool = True,
    meta: dict | None = None,
) -> RunTrace:
    """Run the full method for len(ws) steps from x(0) = x0, y(0) = 1.

    Parameters
    ----------
    ws : sequence of WeightMatrix
        One mixing matrix per step; its length fixes the run length.
    x0 : array (n, d)
        Initial values; must sit inside the objective's box.
    objective, schedule
        The network objective and stepsize rule.
    record_products : bool
        Also accumulate companion matrices and their running product gap
        (needed for the contraction diagnostics; skip on long sweeps).

    The loop enforces the declared subgradient ceiling and box containment
    at every step and raises RuntimeError with the offending agent and
    step if either fails.
    """
    steps = len(ws)
    if steps == 0:
        raise ValueError("need at least one mixing step")
    state = initial_state(x0)
    n, d = state.n, state.d
    if objective.n != n or objective.d != d:
        raise ValueError(
            f"objective is for (n, d)=({objective.n}, {objective.d}), "
            f"initial values have ({n}, {d})"
        )
    alphas = stepsize_array(schedule, steps)

    xs = np.empty((steps, n, d))
    ys = np.empty((steps, n))
    zs = np.empty((steps, n, d))
    gs = np.empty((steps, n, d))
    zbar = np.empty((steps, d))
    zlyap = np.empty((steps, d))
    consensus = np.empty(steps)
    running_gap = np.empty(steps)
    deviation = np.empty(steps)
    s_product_gap = np.empty(steps) if record_products else None
    smatrices: list[SMatrix] | None = [] if record_products else None

    g_ceiling = objective.g_bound + 1e-9
    avg_num = np.zeros(d)
    avg_den = 0.0
    min_y = float(state.y.min())
    prod = np.eye(n) if record_products else None
    limit = np.full((n, n), 1.0 / n) if record_products else None
    z = ratio_state(state)

    for t in range(steps):
        alpha = alphas[t]
        g = objective.agent_subgradients(z)
        norms = np.sqrt((g ** 2).sum(axis=1))
        if (norms > g_ceiling).any():
            k = int(norms.argmax())
            raise RuntimeError(
                f"agent {k + 1} produced a subgradient of norm {norms[k]:.6g} "
                f"above the declared ceiling {objective.g_bound:.6g} at t={t}"
            )
        for i in range(n):
            if not objective.contains(z[i]):
                raise RuntimeError(
                    f"agent {i + 1} left the declared box at t={t}: z={z[i]!r}"
                )

        xs[t] = state.x
        ys[t] = state.y
        zs[t] = z
        gs[t] = g
        zbar[t] = z.mean(axis=0)
        pi = state.y / n
        zlyap[t] = pi @ z
        consensus[t] = consensus_error(z)
        avg_num += alpha * zbar[t]
        avg_den += alpha
        running_gap[t] = optimality_gap(objective, avg_num / avg_den)

        if record_products:
            s = build_s_matrix(ws[t], state.y)
            smatrices.append(s)
            prod = s.entries @ prod
            s_product_gap[t] = float(np.abs(prod - limit).max())

        h_mean = (state.x - alpha * g).mean(axis=0)
        state = pushsub_step(state, ws[t], float(alpha), objective)
        min_y = min(min_y, float(state.y.min()))
        z = ratio_state(state)
        deviation[t] = float(np.sqrt(((z - h_mean) ** 2).sum(axis=1)).max())

    final_pi = state.y / n
    trace = RunTrace(
        n=n, d=d, steps=steps, alphas=alphas,
        xs=xs, ys=ys, zs=zs, gs=gs, zbar=zbar, zlyap=zlyap,
        consensus=consensus, running_gap=running_gap, deviation=deviation,
        final_state=state, final_zlyap=final_pi @ z, min_y=min_y,
        s_product_gap=s_product_gap, smatrices=smatrices,
        meta=dict(meta or {}),
    )
    return trace


def weighted_running_average(
    trace: RunTrace, upto: int, agent: int | None = None
) -> np.ndarray:
    """Stepsize-weighted average of ratio means (or of one agent's ratios)
    over steps 0..upto inclusive."""
    if not 0 <= upto < trace.steps:
        raise ValueError(f"upto must lie in [0, {trace.steps - 1}], got {upto}")
    w = trace.alphas[: upto + 1]
    if agent is None:
        src = trace.zbar[: upto + 1]
    else:
        if not 0 <= agent < trace.n:
            raise ValueError(f"agent index out of range: {agent}")
        src = trace.zs[: upto + 1, agent]
    return (w[:, None] * src).sum(axis=0) / w.sum()
