"""Column-stochastic mixing weights over a digraph.

Entry ``W[i, j]`` is the weight receiver ``i`` applies to the value pushed
by sender ``j``; it must be positive exactly when the arc ``j -> i`` exists
and each column must sum to one (every sender splits its whole mass among
its out-neighbors, itself included).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Digraph

__all__ = [
    "WeightMatrix",
    "WeightValidation",
    "build_weights",
    "validate_column_stochastic",
    "format_matrix",
    "parse_matrix",
]

COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True)
class WeightMatrix:
    """Immutable n-by-n column-stochastic matrix with its support floor.

    ``beta`` is the smallest positive entry; with the uniform rule it is
    1/(max out-degree) and never below 1/n.
    """

    n: int
    entries: np.ndarray = field(repr=False)
    beta: float

    def __post_init__(self) -> None:
        e = np.array(self.entries, dtype=float)
        if e.shape != (self.n, self.n):
            raise ValueError(f"expected shape ({self.n}, {self.n}), got {e.shape}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


@dataclass(frozen=True)
class WeightValidation:
    """Outcome of checking a candidate weight matrix against a graph."""

    violations: tuple[str, ...]
    column_sum_error: float
    min_positive: float

    @property
    def ok(self) -> bool:
        return not self.violations


def build_weights(g: Digraph, rule: str = "uniform-out-degree") -> WeightMatrix:
    """Mixing matrix for one step on graph ``g``.

    The only built-in rule splits each sender's mass equally over its
    out-neighbors: ``W[i, j] = 1 / outdeg(j)`` for every arc ``j -> i``.
    Externally supplied matrices go through
    :func:`validate_column_stochastic` instead.
    """
    if rule != "uniform-out-degree":
        raise ValueError(f"unknown weight rule {rule!r}")
    w = np.zeros((g.n, g.n))
    degs = np.array([g.out_degree(j) for j in range(g.n)], dtype=float)
    for (j, i) in g.arcs:
        w[i, j] = 1.0 / degs[j]
    return WeightMatrix(n=g.n, entries=w, beta=float(1.0 / degs.max()))


def validate_column_stochastic(
    entries: np.ndarray,
    g: Digraph,
    beta_min: float = 0.0,
    tol: float = COLUMN_SUM_TOL,
) -> WeightValidation:
    """Check a candidate matrix against the support and stochasticity rules.

    Violations reported: column sums off by more than ``tol``; a positive
    entry without the matching arc; an arc without a positive entry; a
    positive entry below ``beta_min``; a nonpositive diagonal entry.
    Entries must be nonnegative.
    """
    w = np.asarray(entries, dtype=float)
    n = g.n
    problems: list[str] = []
    if w.shape != (n, n):
        return WeightValidation(
            violations=(f"shape {w.shape} does not match n={n}",),
            column_sum_error=float("nan"),
            min_positive=float("nan"),
        )
    col_err = float(np.abs(w.sum(axis=0) - 1.0).max())
    if col_err > tol:
        bad = [j for j in range(n) if abs(w[:, j].sum() - 1.0) > tol]
        problems.append(
            f"columns {[j + 1 for j in bad]} sum off by up to {col_err:.3e}"
        )
    if (w < 0).any():
        problems.append("negative entries present")
    adj = g.adjacency()
    for i in range(n):
        for j in range(n):
            has_arc = adj[j, i]
            if w[i, j] > 0 and not has_arc:
                problems.append(f"positive weight w[{i + 1},{j + 1}] without arc {j + 1}>{i + 1}")
            if has_arc and w[i, j] <= 0:
                problems.append(f"arc {j + 1}>{i + 1} carries no weight")
    positives = w[w > 0]
    min_pos = float(positives.min()) if positives.size else float("nan")
    if positives.size and beta_min > 0 and min_pos < beta_min:
        problems.append(
            f"smallest positive entry {min_pos:.3e} below floor {beta_min:.3e}"
        )
    if (np.diag(w) <= 0).any():
        bad = [i + 1 for i in range(n) if w[i, i] <= 0]
        problems.append(f"nonpositive diagonal at agents {bad}")
    return WeightValidation(
        violations=tuple(problems),
        column_sum_error=col_err,
        min_positive=min_pos,
    )


def format_matrix(entries: np.ndarray) -> str:
    """Dense row-major text form, one row per line, 17 significant digits."""
    w = np.asarray(entries, dtype=float)
    return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in w) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    """Parse a dense whitespace-separated square matrix."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty matrix file")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError(
            f"matrix is not square: {n} rows, row lengths {sorted({len(r) for r in rows})}"
        )
    try:
        return np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise ValueError(f"bad matrix entry: {exc}") from exc
