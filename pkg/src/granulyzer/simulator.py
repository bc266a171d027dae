"""Deterministic discrete-event simulation of phase-based task execution.

Each phase holds ``k`` subtasks per rank-slot. Two quantities are measured
per phase, each on the phase in isolation:

* ``t_kernel``: makespan of the phase's work on ``P`` ranks. Dynamic mode
  list-schedules the subtasks greedily from one global ready queue (longest
  first, ties by task id, lowest idle rank first); static mode binds each
  slot's ``k`` subtasks to its home rank.
* ``t_overhead``: the exposed part ``(1 - rho)`` of the scheduler timeline,
  i.e. dispatch on the busiest worker (``tau_s`` per subtask) plus serialized
  edge resolution (``tau_e`` per dependency edge). Zero in static mode.

The whole run is also replayed as an asynchronous pipeline (no barriers) to
obtain the end-to-end makespan.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .calibration import ScalingSample
from .model import Mode, PhaseTiming
from .topology import DEFAULT_EDGE_BUDGET, TaskGraph, TopologyClass, build_task_graph
from .workloads import WorkloadSpec, kernel_time


class SimulationConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    workload: WorkloadSpec
    ranks: int
    phases: int = 5
    seed: int = 0
    mode: Mode = Mode.DYNAMIC
    periodic: bool = False
    edge_budget: int | None = DEFAULT_EDGE_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.ranks < 1:
            raise SimulationConfigError(f"ranks must be >= 1, got {self.ranks}")
        if self.phases < 1:
            raise SimulationConfigError(f"phases must be >= 1, got {self.phases}")
        if not 0 <= self.seed < 2**64:
            raise SimulationConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class ExecutionTrace:
    config: SimConfig
    per_phase: tuple[PhaseTiming, ...]
    measured_edges: tuple[int, ...]
    makespan: float

    @property
    def mode(self) -> Mode:
        return self.config.mode

    def to_sample(self) -> ScalingSample:
        """Collapse the phases into one sample using per-phase medians."""
        return ScalingSample(
            ranks=self.config.ranks,
            t_kernel=float(np.median([p.t_kernel for p in self.per_phase])),
            t_overhead=float(np.median([p.t_overhead for p in self.per_phase])),
        )


def subtask_durations(workload: WorkloadSpec, P: int, seed: int, phase: int) -> np.ndarray:
    """Durations of the ``k * P`` subtasks of one phase, indexed by task id.

    Task id ``i * k + j`` is subtask ``j`` of rank-slot ``i``. Each duration is
    log-normal with mean ``kernel_time / k`` and coefficient of variation
    ``workload.imbalance``.
    """
    k = workload.k
    mean = kernel_time(workload, P) / k
    if not (mean > 0 and math.isfinite(mean)):
        raise SimulationConfigError(f"{workload.name}: kernel time at P={P} is {mean * k!r}; need a positive duration")
    if workload.imbalance == 0:
        return np.full(P * k, mean)
    sigma2 = math.log1p(workload.imbalance**2)
    rng = np.random.default_rng(np.random.SeedSequence([seed, phase]))
    return rng.lognormal(math.log(mean) - sigma2 / 2, math.sqrt(sigma2), size=P * k)


def lpt_order(durations: np.ndarray) -> np.ndarray:
    """Task ids ordered longest first, ties broken by the lower id."""
    ids = np.arange(len(durations))
    return np.lexsort((ids, -durations))


def greedy_makespan(durations: np.ndarray, P: int) -> tuple[float, np.ndarray]:
    """List-schedule ``durations`` in LPT order; returns makespan and per-rank task counts."""
    free = [(0.0, r) for r in range(P)]
    counts = np.zeros(P, dtype=int)
    for tid in lpt_order(durations):
        t, r = heapq.heappop(free)
        counts[r] += 1
        heapq.heappush(free, (t + float(durations[tid]), r))
    return max(t for t, _ in free), counts


def block_makespan(durations: np.ndarray, P: int, k: int) -> float:
    return float(durations.reshape(P, k).sum(axis=1).max())


def _pipeline_dynamic(graph: TaskGraph, durations: list[np.ndarray], dispatch: float, per_edge: float) -> float:
    """Asynchronous replay of the dynamic run; returns the makespan.

    A slot becomes eligible once all its dependencies have finished; the central
    scheduler then resolves its edges one slot at a time (``per_edge`` each) and
    releases its subtasks. Idle ranks pay ``dispatch`` before running a subtask.
    """
    P, T, k = graph.ranks, graph.timesteps, graph.k
    is_global = graph.topology is TopologyClass.GLOBAL
    dependents = graph.dependents()
    remaining = [[k] * P for _ in range(T)]
    waiting = [[len(n) for n in graph.neighbors] for _ in range(T)]
    finished_slots = [0] * T

    events: list[tuple[float, int, int, tuple]] = []  # (time, kind, seq, payload)
    seq = 0
    ready: list[tuple[int, float, int, int]] = []  # (phase, -duration, slot, sub)
    idle = list(range(P))
    resolver_free = 0.0

    def release(t: int, i: int) -> None:
        for j in range(k):
            heapq.heappush(ready, (t, -float(durations[t][i * k + j]), i, j))

    def resolve(t: int, i: int, now: float) -> None:
        nonlocal resolver_free, seq
        n_edges = len(graph.neighbors[i])
        if n_edges == 0:
            release(t, i)
            return
        start = max(resolver_free, now)
        resolver_free = start + per_edge * n_edges
        heapq.heappush(events, (resolver_free, 1, seq, (t, i)))
        seq += 1

    for t in range(T):
        for i in range(P):
            if t == 0 or not graph.neighbors[i]:
                release(t, i)

    now = 0.0
    makespan = 0.0
    while True:
        while idle and ready:
            t, neg_d, i, j = heapq.heappop(ready)
            r = heapq.heappop(idle)
            done = now + dispatch - neg_d
            heapq.heappush(events, (done, 0, seq, (t, i, r)))
            seq += 1
        if not events:
            break
        now = events[0][0]
        while events and events[0][0] == now:
            _, kind, _, payload = heapq.heappop(events)
            if kind == 1:
                release(*payload)
                continue
            t, i, r = payload
            heapq.heappush(idle, r)
            makespan = max(makespan, now)
            remaining[t][i] -= 1
            if remaining[t][i] or t + 1 >= T:
                continue
            if is_global:
                finished_slots[t] += 1
                if finished_slots[t] == P:
                    for i2 in range(P):
                        resolve(t + 1, i2, now)
            else:
                for i2 in dependents[i]:
                    waiting[t + 1][i2] -= 1
                    if waiting[t + 1][i2] == 0:
                        resolve(t + 1, i2, now)
    return makespan


def _pipeline_static(graph: TaskGraph, durations: list[np.ndarray]) -> float:
    P, k = graph.ranks, graph.k
    done = np.zeros(P)
    for t, d in enumerate(durations):
        work = d.reshape(P, k).sum(axis=1)
        if t == 0:
            done = work.copy()
            continue
        if graph.topology is TopologyClass.GLOBAL:
            release = np.full(P, done.max())
        else:
            release = np.array([max((done[j] for j in nbrs), default=0.0) for nbrs in graph.neighbors])
        done = np.maximum(done, release) + work
    return float(done.max())


def simulate(config: SimConfig) -> ExecutionTrace:
    w, P = config.workload, config.ranks
    graph = build_task_graph(w.topology, P, config.phases, w.k, periodic=config.periodic,
                             edge_budget=config.edge_budget)
    durations = [subtask_durations(w, P, config.seed, t) for t in range(config.phases)]
    hidden = 1.0 - w.rho

    timings = []
    edges = []
    for t, d in enumerate(durations):
        n_edges = 0 if t == 0 else graph.edges_per_step
        edges.append(n_edges)
        if config.mode is Mode.STATIC:
            timings.append(PhaseTiming(block_makespan(d, P, w.k), 0.0))
            continue
        work, counts = greedy_makespan(d, P)
        overhead = hidden * (int(counts.max()) * w.tau_s + w.tau_e * n_edges)
        timings.append(PhaseTiming(work, overhead))

    if config.mode is Mode.STATIC:
        makespan = _pipeline_static(graph, durations)
    else:
        makespan = _pipeline_dynamic(graph, durations, hidden * w.tau_s, hidden * w.tau_e)
    return ExecutionTrace(config, tuple(timings), tuple(edges), makespan)


def run_sweep_traces(workload, ranks, phases=5, seed=0, mode=Mode.DYNAMIC, **kwargs) -> list[ExecutionTrace]:
    ranks = list(ranks)
    if not ranks:
        raise SimulationConfigError("rank list is empty")
    if any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise SimulationConfigError(f"rank list must be strictly ascending, got {ranks}")
    return [simulate(SimConfig(workload, P, phases, seed, Mode.parse(mode), **kwargs)) for P in ranks]


def run_sweep(workload, ranks, phases=5, seed=0, mode=Mode.DYNAMIC, **kwargs) -> list[ScalingSample]:
    """One median-aggregated sample per rank count."""
    return [tr.to_sample() for tr in run_sweep_traces(workload, ranks, phases, seed, mode, **kwargs)]
