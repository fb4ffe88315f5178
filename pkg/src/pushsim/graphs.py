"""Time-varying directed graphs with self-arcs.

A network is a finite sequence of digraphs on a fixed vertex set, one graph
per time step.  Arcs are stored as ``(sender, receiver)`` pairs with vertices
indexed from 0 internally; the text format is 1-indexed.  Every vertex always
keeps a self-arc, so each agent can at least talk to itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Digraph",
    "GraphSequence",
    "digraph",
    "generate_sequence",
    "union_graph",
    "is_strongly_connected",
    "uniform_connectivity_window",
    "format_graph_sequence",
    "parse_graph_sequence",
]

GENERATOR_KINDS = ("static-cycle", "rotating-arc", "random-walkable")


@dataclass(frozen=True)
class Digraph:
    """Directed graph on vertices ``0..n-1``; every vertex has a self-arc."""

    n: int
    arcs: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one vertex, got n={self.n}")
        for (j, i) in self.arcs:
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise ValueError(f"arc ({j}, {i}) out of range for n={self.n}")
        missing = [i for i in range(self.n) if (i, i) not in self.arcs]
        if missing:
            raise ValueError(f"missing self-arc at vertices {missing}")

    def out_neighbors(self, j: int) -> set[int]:
        """Vertices that receive from ``j`` (always includes ``j``)."""
        return {i for (jj, i) in self.arcs if jj == j}

    def in_neighbors(self, i: int) -> set[int]:
        """Vertices that send to ``i`` (always includes ``i``)."""
        return {j for (j, ii) in self.arcs if ii == i}

    def out_degree(self, j: int) -> int:
        return len(self.out_neighbors(j))

    def adjacency(self) -> np.ndarray:
        """Boolean matrix ``A[j, i]`` true iff arc ``j -> i`` is present."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for (j, i) in self.arcs:
            a[j, i] = True
        return a


def digraph(n: int, cross_arcs: Iterable[tuple[int, int]] = ()) -> Digraph:
    """Build a ``Digraph`` from the cross arcs, adding all self-arcs."""
    arcs = set((i, i) for i in range(n))
    arcs.update((j, i) for (j, i) in cross_arcs)
    return Digraph(n=n, arcs=frozenset(arcs))


@dataclass(frozen=True)
class GraphSequence:
    """One digraph per step over a finite horizon.

    ``kind``/``seed`` record how the sequence was produced ("file" or
    "custom" sequences carry seed 0).  Generated sequences are a pure
    function of (kind, n, horizon, seed) and are prefix-stable: a longer
    horizon with the same seed extends the shorter sequence unchanged.
    """

    n: int
    horizon: int
    kind: str
    seed: int
    graphs: tuple[Digraph, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if len(self.graphs) != self.horizon:
            raise ValueError(
                f"expected {self.horizon} graphs, got {len(self.graphs)}"
            )
        for g in self.graphs:
            if g.n != self.n:
                raise ValueError("all graphs must share the same vertex count")

    def __len__(self) -> int:
        return self.horizon

    def __getitem__(self, t: int) -> Digraph:
        return self.graphs[t]


def _cycle_arcs(n: int) -> list[tuple[int, int]]:
    return [(j, (j + 1) % n) for j in range(n)]


def generate_sequence(
    kind: str,
    n: int,
    horizon: int,
    seed: int = 0,
    *,
    arc_prob: float = 0.25,
    inject_every: int = 5,
) -> GraphSequence:
    """Generate a named deterministic graph sequence.

    Parameters
    ----------
    kind : str
        One of ``static-cycle`` (the directed ring at every step),
        ``rotating-arc`` (a single cross arc ``t mod n -> (t+1) mod n``
        per step), or ``random-walkable`` (each cross arc present
        independently with probability ``arc_prob``, plus the full ring
        injected every ``inject_every`` steps so that every window of
        ``inject_every`` consecutive steps is jointly strongly connected).
    n, horizon, seed : int
        Vertex count, number of steps, and generator seed.  The same
        arguments always reproduce the same sequence.
    """
    if kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if n < 1:
        raise ValueError("n must be positive")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if kind == "static-cycle":
        g = digraph(n, _cycle_arcs(n))
        graphs = tuple(g for _ in range(horizon))
    elif kind == "rotating-arc":
        graphs = tuple(
            digraph(n, [(t % n, (t + 1) % n)]) for t in range(horizon)
        )
    else:  # random-walkable
        if not (0.0 <= arc_prob <= 1.0):
            raise ValueError("arc_prob must lie in [0, 1]")
        if inject_every < 1:
            raise ValueError("inject_every must be positive")
        rng = np.random.default_rng(seed)
        ring = _cycle_arcs(n)
        out = []
        for t in range(horizon):
            # One draw block per step keeps prefixes seed-stable.
            coins = rng.random((n, n))
            arcs = [
                (j, i)
                for j in range(n)
                for i in range(n)
                if i != j and coins[j, i] < arc_prob
            ]
            if t % inject_every == 0:
                arcs.extend(ring)
            out.append(digraph(n, arcs))
        graphs = tuple(out)
    return GraphSequence(n=n, horizon=horizon, kind=kind, seed=seed, graphs=graphs)


def union_graph(graphs: Sequence[Digraph]) -> Digraph:
    """Arc union of the given graphs (all on the same vertex set)."""
    if not graphs:
        raise ValueError("union of an empty collection is undefined")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("vertex counts differ")
    arcs: set[tuple[int, int]] = set()
    for g in graphs:
        arcs |= g.arcs
    return Digraph(n=n, arcs=frozenset(arcs))


def is_strongly_connected(g: Digraph) -> bool:
    """Every vertex reaches every other along directed arcs."""
    if g.n == 1:
        return True
    fwd: list[list[int]] = [[] for _ in range(g.n)]
    rev: list[list[int]] = [[] for _ in range(g.n)]
    for (j, i) in g.arcs:
        fwd[j].append(i)
        rev[i].append(j)

    def reaches_all(adj: list[list[int]]) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == g.n

    # Strong connectivity == vertex 0 reaches all and is reached by all.
    return reaches_all(fwd) and reaches_all(rev)


def uniform_connectivity_window(seq: GraphSequence) -> int | None:
    """Smallest window length L certifying joint strong connectivity.

    Returns the smallest L such that for every start t with a full window
    inside the horizon, the union of graphs over [t, t+L-1] is strongly
    connected.  Returns None if even the whole horizon fails.  This is a
    finite-horizon certificate over the materialized sequence only; it
    says nothing about steps beyond the horizon.
    """
    h = seq.horizon
    for window in range(1, h + 1):
        ok = True
        for start in range(0, h - window + 1):
            if not is_strongly_connected(
                union_graph(seq.graphs[start : start + window])
            ):
                ok = False
                break
        if ok:
            return window
    return None


def format_graph_sequence(seq: GraphSequence) -> str:
    """Render the 1-indexed text form: header ``n horizon``, then one
    ``t: j>i j>i ...`` line per step with self-arcs omitted."""
    lines = [f"{seq.n} {seq.horizon}"]
    for t, g in enumerate(seq.graphs):
        cross = sorted((j, i) for (j, i) in g.arcs if j != i)
        body = " ".join(f"{j + 1}>{i + 1}" for (j, i) in cross)
        lines.append(f"{t}: {body}".rstrip())
    return "\n".join(lines) + "\n"


def parse_graph_sequence(text: str) -> GraphSequence:
    """Parse the text form produced by :func:`format_graph_sequence`.

    Self-arcs are implied and added on every vertex; listing one
    explicitly is tolerated.  Steps must appear in order 0..horizon-1.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"bad header {lines[0]!r}; expected 'n horizon'")
    try:
        n, horizon = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ValueError(f"bad header {lines[0]!r}") from exc
    if n < 1 or horizon < 1:
        raise ValueError("header values must be positive")
    if len(lines) - 1 != horizon:
        raise ValueError(
            f"expected {horizon} step lines, found {len(lines) - 1}"
        )
    graphs = []
    for t, ln in enumerate(lines[1:]):
        label, _, rest = ln.partition(":")
        try:
            step = int(label.strip())
        except ValueError as exc:
            raise ValueError(f"bad step label in line {ln!r}") from exc
        if step != t:
            raise ValueError(f"step lines out of order: expected {t}, got {step}")
        cross = []
        for tok in rest.split():
            j_txt, sep, i_txt = tok.partition(">")
            if not sep:
                raise ValueError(f"bad arc token {tok!r} at step {t}")
            try:
                j, i = int(j_txt), int(i_txt)
            except ValueError as exc:
                raise ValueError(f"bad arc token {tok!r} at step {t}") from exc
            if not (1 <= j <= n and 1 <= i <= n):
                raise ValueError(
                    f"arc {tok!r} at step {t} out of range for n={n}"
                )
            cross.append((j - 1, i - 1))
        graphs.append(digraph(n, cross))
    return GraphSequence(
        n=n, horizon=horizon, kind="file", seed=0, graphs=tuple(graphs)
    )
