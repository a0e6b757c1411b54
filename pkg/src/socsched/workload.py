"""Job DAG templates, synthetic catalog generation and the arrival stream."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class TaskTemplate:
    task_id: int
    exec_time: dict[int, int]
    energy_per_exec: dict[int, float] = field(default_factory=dict)


@dataclass
class JobDag:
    job_type_id: int
    tasks: list[TaskTemplate]
    edges: list[tuple[int, int, float]]

    def __post_init__(self):
        n = len(self.tasks)
        self.preds: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        self.succs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for p, s, v in self.edges:
            if 0 <= p < n and 0 <= s < n:
                self.preds[s].append((p, v))
                self.succs[p].append((s, v))

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def roots(self) -> list[int]:
        return [t for t in range(self.num_tasks) if not self.preds[t]]

    def topological_order(self) -> list[int] | None:
        """Kahn's algorithm; ``None`` if the edge relation has a cycle."""
        indeg = [len(p) for p in self.preds]
        queue = deque(t for t in range(self.num_tasks) if indeg[t] == 0)
        order = []
        while queue:
            u = queue.popleft()
            order.append(u)
            for s, _ in self.succs[u]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    queue.append(s)
        return order if len(order) == self.num_tasks else None

    def heights(self) -> list[int]:
        """Number of tasks on the longest path from each task to an exit."""
        order = self.topological_order()
        if order is None:
            raise ValueError(f"job type {self.job_type_id} is cyclic")
        h = [1] * self.num_tasks
        for u in reversed(order):
            for s, _ in self.succs[u]:
                h[u] = max(h[u], 1 + h[s])
        return h

    def depth(self) -> int:
        return max(self.heights(), default=0)


@dataclass
class JobTypeCatalog:
    job_types: list[JobDag]
    selection_weights: list[float]

    def __post_init__(self):
        if len(self.job_types) != len(self.selection_weights):
            raise ValueError("one selection weight per job type is required")
        if abs(sum(self.selection_weights) - 1.0) > 1e-12:
            raise ValueError(f"selection weights sum to {sum(self.selection_weights)!r}, not 1")
        if any(w < 0 for w in self.selection_weights):
            raise ValueError("selection weights must be non-negative")

    def __getitem__(self, job_type_id: int) -> JobDag:
        return self.job_types[job_type_id]

    def __len__(self):
        return len(self.job_types)

    @property
    def max_tasks(self) -> int:
        return max(d.num_tasks for d in self.job_types)

    @property
    def pe_types(self) -> set[int]:
        return {k for d in self.job_types for t in d.tasks for k in t.exec_time}

    def sample_types(self, rng: np.random.Generator, n: int) -> list[int]:
        if n == 0:
            return []
        return [int(k) for k in rng.choice(len(self.job_types), size=n, p=self.selection_weights)]

    def to_dict(self) -> dict:
        return {
            "job_types": [
                {
                    "id": d.job_type_id,
                    "tasks": [
                        {
                            "id": t.task_id,
                            "exec": {str(k): v for k, v in sorted(t.exec_time.items())},
                            "energy": {str(k): v for k, v in sorted(t.energy_per_exec.items())},
                        }
                        for t in d.tasks
                    ],
                    "edges": [[p, s, v] for p, s, v in d.edges],
                }
                for d in self.job_types
            ],
            "weights": list(self.selection_weights),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JobTypeCatalog":
        dags = []
        for jt in data["job_types"]:
            tasks = [
                TaskTemplate(
                    task_id=int(t["id"]),
                    exec_time={int(k): int(v) for k, v in t["exec"].items()},
                    energy_per_exec={int(k): float(v) for k, v in t.get("energy", {}).items()},
                )
                for t in jt["tasks"]
            ]
            edges = [(int(p), int(s), float(v)) for p, s, v in jt["edges"]]
            dags.append(JobDag(int(jt["id"]), tasks, edges))
        return cls(dags, [float(w) for w in data["weights"]])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "JobTypeCatalog":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs of the layered random-DAG generator.

    ``type_exec_scale`` multiplies the uniform execution-time draw per PE type
    (``None`` keeps every type on the raw ``exec_range``).
    """

    min_layers: int = 2
    max_layers: int | None = None
    p_edge: float = 0.4
    volume_range: tuple[float, float] = (1.0, 20.0)
    exec_range: tuple[int, int] = (2, 15)
    type_exec_scale: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "min_layers": self.min_layers,
            "max_layers": self.max_layers,
            "p_edge": self.p_edge,
            "volume_range": list(self.volume_range),
            "exec_range": list(self.exec_range),
            "type_exec_scale": None if self.type_exec_scale is None else list(self.type_exec_scale),
        }


def _layered_dag(rng, job_type_id, num_tasks, num_pe_types, params: GeneratorParams) -> JobDag:
    lo, hi = params.exec_range
    scale = params.type_exec_scale or (1.0,) * num_pe_types
    tasks = []
    for t in range(num_tasks):
        draws = rng.integers(lo, hi + 1, size=num_pe_types)
        exec_time = {k: max(1, int(round(float(draws[k]) * scale[k]))) for k in range(num_pe_types)}
        tasks.append(TaskTemplate(t, exec_time))
    if num_tasks == 1:
        return JobDag(job_type_id, tasks, [])

    max_layers = min(params.max_layers or num_tasks, num_tasks)
    min_layers = min(params.min_layers, max_layers)
    n_layers = int(rng.integers(min_layers, max_layers + 1))
    # tasks are numbered layer by layer so every edge points to a larger id
    cuts = sorted(rng.choice(np.arange(1, num_tasks), size=n_layers - 1, replace=False).tolist())
    bounds = [0, *cuts, num_tasks]
    layers = [list(range(bounds[i], bounds[i + 1])) for i in range(n_layers)]

    vlo, vhi = params.volume_range
    edge_set: set[tuple[int, int]] = set()
    for a, b in zip(layers, layers[1:]):
        for u in a:
            for v in b:
                if rng.random() < params.p_edge:
                    edge_set.add((u, v))
        # orphans: no predecessor in the previous layer, no successor in the next
        for v in b:
            if not any((u, v) in edge_set for u in a):
                edge_set.add((int(rng.choice(a)), v))
        for u in a:
            if not any((u, v) in edge_set for v in b):
                edge_set.add((u, int(rng.choice(b))))

    # every task now reaches the first and last layer; join leftover components
    parent = list(range(num_tasks))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edge_set:
        parent[find(u)] = find(v)
    for u in layers[0][1:]:
        if find(u) != find(layers[0][0]):
            candidates = [v for v in layers[1] if find(v) == find(layers[0][0])]
            v = int(rng.choice(candidates))
            edge_set.add((u, v))
            parent[find(u)] = find(v)

    edges = [(u, v, float(rng.uniform(vlo, vhi))) for u, v in sorted(edge_set)]
    return JobDag(job_type_id, tasks, edges)


def generate_catalog(
    seed: int,
    num_types: int = 5,
    tasks_per_job: int = 10,
    num_pe_types: int = 3,
    gen_params: GeneratorParams | None = None,
) -> JobTypeCatalog:
    """Build ``num_types`` random layered DAGs with uniform selection weights."""
    params = gen_params or GeneratorParams()
    if num_types < 1:
        raise ValueError(f"num_types must be >= 1, got {num_types}")
    if tasks_per_job < 1:
        raise ValueError(f"tasks_per_job must be >= 1, got {tasks_per_job}")
    if num_pe_types < 1:
        raise ValueError(f"num_pe_types must be >= 1, got {num_pe_types}")
    if not 0.0 <= params.p_edge <= 1.0:
        raise ValueError(f"p_edge must lie in [0, 1], got {params.p_edge}")
    if params.exec_range[0] < 1 or params.exec_range[1] < params.exec_range[0]:
        raise ValueError(f"bad exec_range {params.exec_range}")
    if params.volume_range[0] < 0 or params.volume_range[1] < params.volume_range[0]:
        raise ValueError(f"bad volume_range {params.volume_range}")
    if params.type_exec_scale is not None and (
        len(params.type_exec_scale) != num_pe_types or min(params.type_exec_scale) <= 0
    ):
        raise ValueError("type_exec_scale needs one positive factor per PE type")

    rng = np.random.default_rng(seed)
    dags = [_layered_dag(rng, k, tasks_per_job, num_pe_types, params) for k in range(num_types)]
    return JobTypeCatalog(dags, [1.0 / num_types] * num_types)


@dataclass
class ArrivalStream:
    """Injection clocks of a run.

    ``raw_gaps`` keeps the continuous exponential draws; ``arrivals`` holds the
    integer clocks obtained by rounding each gap up to at least one clock.
    """

    scale: float
    arrivals: list[tuple[int, int]]
    raw_gaps: np.ndarray


def sample_arrivals(catalog: JobTypeCatalog, scale: float, horizon: int, seed: int) -> ArrivalStream:
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if horizon < 0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    rng = np.random.default_rng(seed)
    clocks: list[int] = []
    gaps: list[float] = []
    clk = 0
    while horizon > 0:
        gap = float(rng.exponential(scale))
        clk += max(1, math.ceil(gap))
        if clk >= horizon:
            break
        gaps.append(gap)
        clocks.append(clk)
    types = catalog.sample_types(rng, len(clocks))
    return ArrivalStream(scale, list(zip(clocks, types)), np.asarray(gaps))


@dataclass
class Violation:
    kind: str
    detail: str


def validate_dag(dag: JobDag, pe_types=None) -> list[Violation]:
    """List every structural problem of ``dag``; an empty list means valid."""
    out: list[Violation] = []
    n = dag.num_tasks
    if n == 0:
        out.append(Violation("empty", "job has no tasks"))
        return out
    ids = [t.task_id for t in dag.tasks]
    if ids != list(range(n)):
        out.append(Violation("ids", f"task ids must be 0..{n - 1}, got {ids}"))
    seen = set()
    for p, s, v in dag.edges:
        if not (0 <= p < n and 0 <= s < n):
            out.append(Violation("edge", f"edge ({p}, {s}) references a missing task"))
        elif p == s:
            out.append(Violation("cycle", f"self-loop on task {p}"))
        if (p, s) in seen:
            out.append(Violation("edge", f"duplicate edge ({p}, {s})"))
        seen.add((p, s))
        if v < 0:
            out.append(Violation("edge", f"negative data volume on ({p}, {s})"))
    if dag.topological_order() is None:
        out.append(Violation("cycle", "edge relation is not acyclic"))

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, s, _ in dag.edges:
        if 0 <= p < n and 0 <= s < n:
            parent[find(p)] = find(s)
    if len({find(t) for t in range(n)}) > 1:
        out.append(Violation("connectivity", "job graph is not weakly connected"))

    wanted = set(pe_types) if pe_types is not None else {k for t in dag.tasks for k in t.exec_time}
    for t in dag.tasks:
        missing = sorted(wanted - set(t.exec_time))
        if missing:
            out.append(Violation("completeness", f"task {t.task_id} lacks exec_time for PE types {missing}"))
        bad = [k for k, v in t.exec_time.items() if v < 1]
        if bad:
            out.append(Violation("completeness", f"task {t.task_id} has exec_time < 1 for PE types {bad}"))
    return out


def validate_catalog(catalog: JobTypeCatalog, pe_types=None) -> dict[int, list[Violation]]:
    pe_types = catalog.pe_types if pe_types is None else pe_types
    return {d.job_type_id: validate_dag(d, pe_types) for d in catalog.job_types}
