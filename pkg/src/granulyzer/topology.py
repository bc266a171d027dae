"""Dependency neighborhoods and timestep-by-rank task graphs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

DEFAULT_EDGE_BUDGET = 10_000_000


class EdgeBudgetExceeded(MemoryError):
    """Raised when a task graph would hold more edges than the configured budget."""

    def __init__(self, edges: int, budget: int):
        super().__init__(f"task graph needs {edges} edges, budget is {budget}")
        self.edges = edges
        self.budget = budget


class TopologyClass(enum.Enum):
    GLOBAL = "global"
    LOCAL_STENCIL = "local_stencil"
    LOCAL_SWEEP = "local_sweep"
    INDEPENDENT = "independent"

    @property
    def edge_growth(self) -> int:
        """Polynomial degree of the per-timestep edge count in P."""
        return _EDGE_GROWTH[self]

    @property
    def is_local(self) -> bool:
        return self in (TopologyClass.LOCAL_STENCIL, TopologyClass.LOCAL_SWEEP)

    @classmethod
    def parse(cls, value: "str | TopologyClass") -> "TopologyClass":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"stencil": "local_stencil", "sweep": "local_sweep", "localstencil": "local_stencil",
                   "localsweep": "local_sweep"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(t.value for t in cls)
            raise ValueError(f"unknown topology {value!r}; expected one of: {valid}") from None


_EDGE_GROWTH = {
    TopologyClass.GLOBAL: 2,
    TopologyClass.LOCAL_STENCIL: 1,
    TopologyClass.LOCAL_SWEEP: 1,
    TopologyClass.INDEPENDENT: 0,
}


def _check_rank(P: int, i: int) -> None:
    if P < 1:
        raise ValueError(f"P must be >= 1, got {P}")
    if not 0 <= i < P:
        raise ValueError(f"rank index {i} outside [0, {P})")


def neighborhood(topology: TopologyClass, P: int, i: int, periodic: bool = False) -> tuple[int, ...]:
    """Ranks at timestep t-1 that task (t, i) depends on, sorted ascending.

    Local neighbors falling outside ``[0, P)`` are dropped unless ``periodic``
    is set, in which case they wrap around.
    """
    _check_rank(P, i)
    if topology is TopologyClass.GLOBAL:
        return tuple(range(P))
    if topology is TopologyClass.INDEPENDENT:
        return ()
    offsets = (-1, 0, 1) if topology is TopologyClass.LOCAL_STENCIL else (-1, 0)
    if periodic:
        return tuple(sorted({(i + d) % P for d in offsets}))
    return tuple(i + d for d in offsets if 0 <= i + d < P)


def edge_count(topology: TopologyClass, P: int, periodic: bool = False) -> int:
    """Number of dependency edges between two consecutive timesteps."""
    if P < 1:
        raise ValueError(f"P must be >= 1, got {P}")
    if periodic and topology.is_local:
        return sum(len(neighborhood(topology, P, i, periodic=True)) for i in range(P))
    if topology is TopologyClass.GLOBAL:
        return P * P
    if topology is TopologyClass.LOCAL_STENCIL:
        return 3 * P - 2
    if topology is TopologyClass.LOCAL_SWEEP:
        return 2 * P - 1
    return 0


@dataclass(frozen=True)
class TaskId:
    timestep: int
    rank_index: int


@dataclass(frozen=True)
class TaskGraph:
    """Grid of ``timesteps x ranks`` rank-slot tasks.

    Neighborhoods are identical for every timestep, so they are stored once per
    rank; ``k`` subtasks inside a slot share the slot's dependencies.
    """

    topology: TopologyClass
    ranks: int
    timesteps: int
    k: int = 1
    periodic: bool = False
    neighbors: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    @property
    def n_tasks(self) -> int:
        return self.ranks * self.timesteps

    @property
    def edges_per_step(self) -> int:
        return sum(len(n) for n in self.neighbors)

    @property
    def n_edges(self) -> int:
        return (self.timesteps - 1) * self.edges_per_step

    def dependencies(self, task: TaskId) -> tuple[TaskId, ...]:
        t, i = task.timestep, task.rank_index
        if not 0 <= t < self.timesteps:
            raise ValueError(f"timestep {t} outside [0, {self.timesteps})")
        _check_rank(self.ranks, i)
        if t == 0:
            return ()
        return tuple(TaskId(t - 1, j) for j in self.neighbors[i])

    def dependents(self) -> tuple[tuple[int, ...], ...]:
        """Reverse neighborhoods: for rank j, the ranks at t+1 that wait on (t, j)."""
        rev: list[list[int]] = [[] for _ in range(self.ranks)]
        for i, nbrs in enumerate(self.neighbors):
            for j in nbrs:
                rev[j].append(i)
        return tuple(tuple(r) for r in rev)

    def edges(self) -> Iterator[tuple[TaskId, TaskId]]:
        """Yield ``(task, dependency)`` pairs, timestep by timestep."""
        for t in range(1, self.timesteps):
            for i, nbrs in enumerate(self.neighbors):
                for j in nbrs:
                    yield TaskId(t, i), TaskId(t - 1, j)


def build_task_graph(
    topology: TopologyClass,
    P: int,
    timesteps: int,
    k: int = 1,
    *,
    periodic: bool = False,
    edge_budget: int | None = DEFAULT_EDGE_BUDGET,
) -> TaskGraph:
    if P < 1 or timesteps < 1 or k < 1:
        raise ValueError(f"P, timesteps and k must all be >= 1 (got {P}, {timesteps}, {k})")
    total = (timesteps - 1) * edge_count(topology, P, periodic=periodic)
    if edge_budget is not None and total > edge_budget:
        raise EdgeBudgetExceeded(total, edge_budget)
    if topology is TopologyClass.GLOBAL:
        full = tuple(range(P))
        neighbors = (full,) * P
    else:
        neighbors = tuple(neighborhood(topology, P, i, periodic=periodic) for i in range(P))
    return TaskGraph(topology, P, timesteps, k, periodic, neighbors)
