"""Undirected simple graphs and the clique enumeration used by generators.

Graphs are immutable; edges are stored as sorted (u, v) pairs with
u < v.  Named constructors cover the shapes the experiments use:
``complete:n``, ``regular:n:d`` (circulant, deterministic), ``grid:r:c``
and ``path:n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

Edge = tuple[int, int]


def _norm_edge(u: int, v: int, n: int) -> Edge:
    u, v = int(u), int(v)
    if u == v:
        raise ConfigError(f"self loop at vertex {u}")
    if not (0 <= u < n and 0 <= v < n):
        raise ConfigError(f"edge ({u},{v}) out of range for n={n}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[Edge, ...]
    max_degree: int = field(init=False)

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError("vertex count must be nonnegative")
        seen = set()
        deg = [0] * self.n
        norm = []
        for u, v in self.edges:
            e = _norm_edge(u, v, self.n)
            if e in seen:
                raise ConfigError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
            deg[e[0]] += 1
            deg[e[1]] += 1
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        object.__setattr__(self, "max_degree", max(deg, default=0))

    def neighbors(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def edge_set(self) -> set[Edge]:
        return set(self.edges)

    def cliques_up_to(self, t: int) -> list[tuple[int, ...]]:
        """All cliques of size 1..t, as sorted vertex tuples.

        Singletons count as cliques; the empty clique is excluded.
        """
        if t < 1:
            raise ConfigError("clique size bound must be >= 1")
        adj = self.neighbors()
        out: list[tuple[int, ...]] = []

        def extend(clique: tuple[int, ...], cands: set[int]) -> None:
            for v in sorted(cands):
                grown = clique + (v,)
                out.append(grown)
                if len(grown) < t:
                    extend(grown, cands & adj[v] & set(range(v + 1, self.n)))

        extend((), set(range(self.n)))
        return out

    def to_json_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json_dict(cls, d: dict) -> Graph:
        try:
            return cls(int(d["n"]), tuple(tuple(e) for e in d["edges"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed graph JSON: {exc}") from exc


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def grid_graph(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise ConfigError("grid dimensions must be positive")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph(rows * cols, tuple(edges))


def regular_graph(n: int, d: int) -> Graph:
    """Deterministic d-regular circulant: offsets 1..d//2, plus n/2 if d odd."""
    if d < 0 or d >= n:
        raise ConfigError(f"degree {d} infeasible for n={n}")
    if (n * d) % 2 != 0:
        raise ConfigError(f"no {d}-regular graph exists on {n} vertices")
    if d % 2 == 1 and n % 2 != 0:
        raise ConfigError("odd degree requires an even vertex count")
    if 2 * (d // 2) >= n and d > 0:
        raise ConfigError(f"circulant offsets collide for n={n}, d={d}")
    edges = set()
    for i in range(n):
        for k in range(1, d // 2 + 1):
            edges.add(_norm_edge(i, (i + k) % n, n))
        if d % 2 == 1:
            edges.add(_norm_edge(i, (i + n // 2) % n, n))
    return Graph(n, tuple(edges))


def graph_from_edge_list(text: str, n: int | None = None) -> Graph:
    """Parse 'u v' lines; blank lines and '#' comments are skipped."""
    edges = []
    top = -1
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise ConfigError(f"edge list line {lineno}: expected 'u v', got {body!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ConfigError(f"edge list line {lineno}: {exc}") from exc
        edges.append((u, v))
        top = max(top, u, v)
    if n is None:
        n = top + 1
    return Graph(n, tuple(edges))


def parse_graph_spec(spec: str) -> Graph:
    """Named constructors (complete:n, regular:n:d, grid:r:c, path:n) or an edge-list file path."""
    import os

    if os.path.isfile(spec):
        with open(spec) as f:
            return graph_from_edge_list(f.read())
    parts = spec.split(":")
    kind, args = parts[0], parts[1:]
    try:
        nums = [int(a) for a in args]
    except ValueError as exc:
        raise ConfigError(f"bad graph spec {spec!r}: {exc}") from exc
    if kind == "complete" and len(nums) == 1:
        return complete_graph(nums[0])
    if kind == "regular" and len(nums) == 2:
        return regular_graph(nums[0], nums[1])
    if kind == "grid" and len(nums) == 2:
        return grid_graph(nums[0], nums[1])
    if kind == "path" and len(nums) == 1:
        return path_graph(nums[0])
    raise ConfigError(f"unknown graph spec {spec!r}")
