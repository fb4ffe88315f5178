"""Finite-time optimality-gap certificates and rate fits.

Two bound families are evaluated, both certifying the stepsize-weighted
running average of the network mean (or of a single agent's estimates):

* time-varying stepsizes satisfying the decay conditions (positive,
  nonincreasing, divergent sum, square-summable) get a four-term bound
  valid at every step t;
* the fixed stepsize 1/sqrt(T) over a declared horizon T gets a
  four-term bound at the horizon, with every term O(1/sqrt(T)).

The four summands are kept separate in a fixed semantic order:

  1. distance    - initial distance to the optimum plus stepsize energy,
  2. spread      - initial disagreement between agents,
  3. mass        - memory of the initial aggregate state, geometric decay,
  4. tail        - stepsize bleed-through of imperfect consensus.

All constants enter through (eta, mu): eta lower-bounds the push-sum
weights, mu is the geometric mixing rate of the companion chain.  The
caller may supply either the a-priori worst-case pair (astronomically
conservative, held in log space because the floats degenerate) or an
empirical pair measured from the run.  Powers of mu are always taken
through log space so that mu indistinguishable from 1.0 still produces
finite, valid (if huge) certificates.

In a single-agent network the consensus machinery is inactive and the
mixing-rate constants degenerate (mu = 0), so the consensus-driven
summands are reported as zero: terms 3 and 4 of the time-varying bound,
and term 4 of the fixed-stepsize bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .subgradient import StepsizeSchedule, validate_schedule

__all__ = [
    "BoundInputs",
    "BoundValue",
    "BoundReport",
    "ContractionSeries",
    "RateFit",
    "GeometricFit",
    "bound_timevarying",
    "timevarying_series",
    "bound_fixed",
    "consensus_contraction_bound",
    "contraction_series",
    "fit_rate",
    "fit_geometric_rate",
    "mu_power",
]


def mu_power(log_mu: float, k: float) -> float:
    """mu**k computed from log(mu), with mu**0 == 1 even when mu == 0."""
    if k == 0:
        return 1.0
    return math.exp(k * log_mu)


@dataclass(frozen=True)
class BoundInputs:
    """Everything a bound evaluation needs besides the evaluation step.

    ``alphas`` must hold the stepsizes actually applied, covering every
    step the bound will be asked about.  ``mu`` may round to 1.0 for
    worst-case constants; ``log_mu`` (strictly negative) is authoritative
    and ``one_minus_mu`` is derived from it without cancellation.
    """

    n: int
    L: int
    d: int
    G: float
    eta: float
    mu: float
    z_bar0: np.ndarray
    z0: np.ndarray
    z_star: np.ndarray
    x0: np.ndarray
    g0: np.ndarray
    alphas: np.ndarray
    schedule: StepsizeSchedule | None = None
    constants_from: str = "empirical"
    log_mu: float = field(default=None)  # type: ignore[assignment]
    one_minus_mu: float = field(default=None)  # type: ignore[assignment]
    decay_ok: bool = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.n < 1 or self.L < 1 or self.d < 1:
            raise ValueError("n, L, d must be positive")
        if self.G <= 0:
            raise ValueError("subgradient ceiling G must be positive")
        if not 0 < self.eta <= self.n:
            raise ValueError(f"eta must lie in (0, n], got {self.eta}")
        log_mu = self.log_mu
        if log_mu is None:
            if not 0.0 <= self.mu < 1.0:
                raise ValueError(f"mu must lie in [0, 1), got {self.mu}")
            log_mu = math.log(self.mu) if self.mu > 0 else float("-inf")
        if not log_mu < 0:
            raise ValueError("log(mu) must be negative: the chain must contract")
        object.__setattr__(self, "log_mu", float(log_mu))
        if self.one_minus_mu is None:
            object.__setattr__(self, "one_minus_mu", -math.expm1(log_mu))
        if self.one_minus_mu <= 0:
            raise ValueError("1 - mu must be positive")
        for name, shape in (
            ("z_bar0", (self.d,)), ("z0", (self.n, self.d)),
            ("z_star", (self.d,)), ("x0", (self.n, self.d)),
            ("g0", (self.n, self.d)),
        ):
            v = np.asarray(getattr(self, name), dtype=float).reshape(shape)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        a = np.asarray(self.alphas, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("alphas must be a nonempty vector")
        a.setflags(write=False)
        object.__setattr__(self, "alphas", a)
        if self.decay_ok is None:
            ok = (
                self.schedule is not None
                and validate_schedule(self.schedule).assumption == "satisfied"
            )
            object.__setattr__(self, "decay_ok", ok)

    @property
    def initial_mass(self) -> np.ndarray:
        """sum_i (x_i(0) + alpha(0) g_i(0)), the aggregate the mass term remembers."""
        return (self.x0 + self.alphas[0] * self.g0).sum(axis=0)

    def spread_sum(self, ref: np.ndarray) -> float:
        """sum_i (||z_bar0 - z_i0|| + ||ref - z_i0||)."""
        da = np.sqrt(((self.z0 - self.z_bar0) ** 2).sum(axis=1))
        db = np.sqrt(((self.z0 - np.asarray(ref, dtype=float)) ** 2).sum(axis=1))
        return float((da + db).sum())


@dataclass(frozen=True)
class BoundValue:
    """One evaluated certificate: the four summands and their total."""

    t: int
    terms: tuple[float, float, float, float]
    total: float
    form: str                 # "time-varying" | "fixed-horizon"
    agent: int | None = None


def _mu_powers(log_mu: float, ks: np.ndarray) -> np.ndarray:
    out = np.empty(ks.shape)
    nz = ks != 0
    out[~nz] = 1.0
    with np.errstate(over="ignore"):
        out[nz] = np.exp(ks[nz] * log_mu)
    return out


def _check_timevarying(inp: BoundInputs, t: int) -> None:
    if not inp.decay_ok:
        raise ValueError(
            "time-varying bound needs a stepsize satisfying the decay "
            "conditions (positive, nonincreasing, divergent sum, "
            "square-summable)"
        )
    if not 0 <= t < inp.alphas.size:
        raise ValueError(f"t must lie in [0, {inp.alphas.size - 1}], got {t}")


def timevarying_series(
    inp: BoundInputs, t_max: int, agent: int | None = None
) -> list[BoundValue]:
    """Certificates for every t in 0..t_max under a decaying stepsize.

    The stepsize prefix sums are accumulated term by term alongside t
    rather than via closed forms, so the reported numbers are exactly the
    finite sums they claim to be.
    """
    _check_timevarying(inp, t_max)
    if agent is not None and not 0 <= agent < inp.n:
        raise ValueError(f"agent index out of range: {agent}")
    a = inp.alphas
    dist0_sq = float(((inp.z_bar0 - inp.z_star) ** 2).sum())
    ref = inp.z_bar0 if agent is None else inp.z0[agent]
    spread = inp.spread_sum(ref)
    mass_norm = float(np.sqrt((inp.initial_mass ** 2).sum()))
    single = inp.n == 1

    ts = np.arange(t_max + 1, dtype=float)
    pow_t = _mu_powers(inp.log_mu, ts)
    pow_half = _mu_powers(inp.log_mu, ts / 2.0)

    out: list[BoundValue] = []
    sum_a = 0.0
    sum_a2 = 0.0
    mass_acc = 0.0   # sum_{tau=0}^{t-1} alpha(tau) mu^tau
    tail_acc = 0.0   # sum_{tau=0}^{t-1} alpha(tau) (alpha(0) mu^(tau/2) + alpha(ceil(tau/2)))
    for t in range(t_max + 1):
        sum_a += a[t]
        sum_a2 += a[t] * a[t]
        t1 = (dist0_sq + inp.G ** 2 * sum_a2) / (2.0 * sum_a)
        t2 = inp.G * a[0] * spread / (inp.n * sum_a)
        if single:
            t3 = 0.0
            t4 = 0.0
        else:
            t3 = 32.0 * inp.G * mass_norm * mass_acc / (inp.eta * sum_a)
            t4 = (
                32.0 * inp.n * inp.G ** 2 * tail_acc
                / (inp.eta * inp.one_minus_mu * sum_a)
            )
        terms = (t1, t2, t3, t4)
        out.append(
            BoundValue(t=t, terms=terms, total=sum(terms), form="time-varying", agent=agent)
        )
        mass_acc += a[t] * pow_t[t]
        tail_acc += a[t] * (a[0] * pow_half[t] + a[math.ceil(t / 2)])
    return out


def bound_timevarying(inp: BoundInputs, t: int, agent: int | None = None) -> BoundValue:
    """The decaying-stepsize certificate at a single step t."""
    _check_timevarying(inp, t)
    return timevarying_series(inp, t, agent=agent)[t]


def bound_fixed(inp: BoundInputs, T: int, agent: int | None = None) -> BoundValue:
    """Certificate at the horizon for the constant stepsize 1/sqrt(T)."""
    if inp.schedule is None or inp.schedule.kind != "fixed" or inp.schedule.T != T:
        raise ValueError(
            f"fixed-horizon bound needs a fixed 1/sqrt(T) schedule with T={T}"
        )
    if agent is not None and not 0 <= agent < inp.n:
        raise ValueError(f"agent index out of range: {agent}")
    sqrt_t = math.sqrt(T)
    dist0_sq = float(((inp.z_bar0 - inp.z_star) ** 2).sum())
    ref = inp.z_bar0 if agent is None else inp.z0[agent]
    spread = inp.spread_sum(ref)
    mass = (inp.x0 + inp.g0 / sqrt_t).sum(axis=0)
    mass_norm = float(np.sqrt((mass ** 2).sum()))
    t1 = (dist0_sq + inp.G ** 2) / (2.0 * sqrt_t)
    t2 = inp.G * spread / (inp.n * T)
    t3 = 32.0 * inp.G * mass_norm / (inp.eta * inp.one_minus_mu * T)
    t4 = (
        0.0 if inp.n == 1
        else 32.0 * inp.n * inp.G ** 2 / (inp.eta * inp.one_minus_mu * sqrt_t)
    )
    terms = (t1, t2, t3, t4)
    return BoundValue(t=T, terms=terms, total=sum(terms), form="fixed-horizon", agent=agent)


@dataclass(frozen=True)
class ContractionSeries:
    """Per-step envelopes for the one-step consensus deviation.

    ``geometric[t]`` bounds the deviation after step t by
    (8/eta) mu^t ||m0|| + (8 n G / eta) sum_{s<=t} mu^(t-s) alpha(s);
    ``refined`` replaces the convolution by its split-sum estimate
    (alpha(0) mu^(t/2) + alpha(ceil(t/2))) / (1 - mu) and is only defined
    when the stepsize satisfies the decay conditions.
    """

    geometric: np.ndarray
    refined: np.ndarray | None


def contraction_series(inp: BoundInputs, t_max: int) -> ContractionSeries:
    """Evaluate both envelope forms for t = 0..t_max."""
    if not 0 <= t_max < inp.alphas.size:
        raise ValueError(f"t_max must lie in [0, {inp.alphas.size - 1}]")
    a = inp.alphas
    mass_norm = float(np.sqrt((inp.initial_mass ** 2).sum()))
    ts = np.arange(t_max + 1, dtype=float)
    pow_t = _mu_powers(inp.log_mu, ts)
    pow_half = _mu_powers(inp.log_mu, ts / 2.0)
    lead = (8.0 / inp.eta) * mass_norm * pow_t

    mu = math.exp(inp.log_mu)  # rounding up toward 1.0 only loosens the bound
    conv = np.empty(t_max + 1)
    acc = 0.0
    for t in range(t_max + 1):
        acc = mu * acc + a[t]
        conv[t] = acc
    geometric = lead + (8.0 * inp.n * inp.G / inp.eta) * conv

    refined = None
    if inp.decay_ok:
        halves = a[0] * pow_half + a[np.ceil(ts / 2.0).astype(int)]
        refined = lead + (
            8.0 * inp.n * inp.G / (inp.eta * inp.one_minus_mu)
        ) * halves
    return ContractionSeries(geometric=geometric, refined=refined)


def consensus_contraction_bound(inp: BoundInputs, t: int) -> tuple[float, float | None]:
    """(geometric, refined) envelope values at one step."""
    series = contraction_series(inp, t)
    refined = None if series.refined is None else float(series.refined[t])
    return float(series.geometric[t]), refined


@dataclass(frozen=True)
class BoundReport:
    """A certificate series lined up against what the run actually did."""

    label: str
    constants_from: str
    ts: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    terms: np.ndarray  # shape (len(ts), 4)

    @property
    def margins(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def min_margin(self) -> float:
        return float(self.margins.min())

    @property
    def argmin_t(self) -> int:
        return int(self.ts[int(self.margins.argmin())])

    @property
    def ok(self) -> bool:
        return bool(self.min_margin >= 0.0)


# --------------------------------------------------------------------------
# rate fitting
# --------------------------------------------------------------------------

def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line with r^2; constant targets count as perfect."""
    coeffs = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeffs, x)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-300 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(coeffs[0]), float(coeffs[1]), r2


@dataclass(frozen=True)
class RateFit:
    """Log-log decay fit of gap against horizon."""

    slope: float
    intercept: float
    r2: float
    n_used: int
    exact: bool      # every gap was zero to machine noise; no fit possible


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Fit log(gap) ~ slope * log(T) over (T, gap) pairs.

    Nonpositive gaps are exact-convergence artifacts; they are excluded
    from the fit and, if fewer than two positive gaps remain, the whole
    result is flagged exact instead of fitted.
    """
    if len(points) < 3:
        raise ValueError(f"need at least 3 points to fit a rate, got {len(points)}")
    kept = [(float(T), float(g)) for (T, g) in points if g > 0.0]
    if len(kept) < 2:
        return RateFit(
            slope=float("nan"), intercept=float("nan"), r2=1.0,
            n_used=0, exact=True,
        )
    xs = np.log([T for (T, _) in kept])
    ys = np.log([g for (_, g) in kept])
    slope, intercept, r2 = _linear_fit(xs, ys)
    return RateFit(slope=slope, intercept=intercept, r2=r2, n_used=len(kept), exact=False)


@dataclass(frozen=True)
class GeometricFit:
    """Log-linear decay fit value(t) ~ coeff * rho^t."""

    rho: float
    log_coeff: float
    r2: float
    n_used: int
    exact: bool


def fit_geometric_rate(
    values: np.ndarray,
    floor: float = 1e-13,
    min_points: int = 4,
) -> GeometricFit:
    """Fit a geometric decay rate to a nonnegative series.

    Entries at or below ``floor`` are treated as converged-to-noise and
    ignored.  The fit uses the second half of the above-floor range so the
    transient does not bias the asymptotic rate; if that leaves too few
    points the whole above-floor range is used.  A series with fewer than
    two usable points reports exact convergence with rate 0.
    """
    v = np.asarray(values, dtype=float)
    above = np.flatnonzero(v > floor)
    if above.size < 2:
        return GeometricFit(rho=0.0, log_coeff=float("-inf"), r2=1.0, n_used=0, exact=True)
    window = above[above.size // 2 :]
    if window.size < min_points:
        window = above
    slope, intercept, r2 = _linear_fit(window.astype(float), np.log(v[window]))
    return GeometricFit(
        rho=float(math.exp(slope)), log_coeff=intercept, r2=r2,
        n_used=int(window.size), exact=False,
    )
