"""Heterogeneous processing elements: execution lookup, transfer delay, energy."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .workload import TaskTemplate


class MalformedCatalogError(KeyError):
    """A task template has no execution time for a PE type in use."""


@dataclass(frozen=True)
class PeProfile:
    pe_id: int
    pe_type: int
    active_power: float
    idle_power: float

    def __post_init__(self):
        if not self.active_power >= self.idle_power >= 0:
            raise ValueError(f"PE {self.pe_id}: need active_power >= idle_power >= 0")


class Platform:
    """``P`` processing elements plus a symmetric bandwidth matrix.

    The diagonal of ``bandwidth`` is ignored: a transfer to the same PE is free.
    """

    def __init__(self, pes: list[PeProfile], bandwidth):
        self.pes = list(pes)
        n = len(self.pes)
        if n == 0:
            raise ValueError("platform needs at least one PE")
        if [p.pe_id for p in self.pes] != list(range(n)):
            raise ValueError("PE ids must be 0..P-1 in order")
        if len(bandwidth) != n or any(len(row) != n for row in bandwidth):
            raise ValueError("bandwidth must be a P x P matrix")
        bw = [[math.inf if i == j else float(bandwidth[i][j]) for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                if i != j and not bw[i][j] > 0:
                    raise ValueError(f"bandwidth[{i}][{j}] must be positive")
                if bw[i][j] != bw[j][i]:
                    raise ValueError(f"bandwidth not symmetric at ({i}, {j})")
        self.bandwidth = bw

    @property
    def num_pes(self) -> int:
        return len(self.pes)

    @property
    def pe_types(self) -> list[int]:
        return [p.pe_type for p in self.pes]

    def _check(self, pe_id: int) -> PeProfile:
        if not 0 <= pe_id < len(self.pes):
            raise IndexError(f"pe_id {pe_id} out of range for {len(self.pes)} PEs")
        return self.pes[pe_id]

    def exec_time(self, pe_id: int, task: TaskTemplate) -> int:
        pe = self._check(pe_id)
        try:
            return task.exec_time[pe.pe_type]
        except KeyError:
            raise MalformedCatalogError(
                f"task {task.task_id} has no exec_time for PE type {pe.pe_type}"
            ) from None

    def comm_delay(self, src_pe: int, dst_pe: int, data_volume: float) -> int:
        self._check(src_pe)
        self._check(dst_pe)
        if data_volume < 0:
            raise ValueError("data_volume must be non-negative")
        if src_pe == dst_pe:
            return 0
        return math.ceil(data_volume / self.bandwidth[src_pe][dst_pe])

    def task_energy(self, pe_id: int, task: TaskTemplate) -> float:
        pe = self._check(pe_id)
        if pe.pe_type in task.energy_per_exec:
            return task.energy_per_exec[pe.pe_type]
        return pe.active_power * self.exec_time(pe_id, task)

    def mean_comm_delay(self, data_volume: float) -> float:
        """Average delay of one edge over all ordered pairs of distinct PEs."""
        n = len(self.pes)
        if n < 2:
            return 0.0
        total = sum(
            self.comm_delay(i, j, data_volume) for i in range(n) for j in range(n) if i != j
        )
        return total / (n * (n - 1))

    def to_dict(self) -> dict:
        n = len(self.pes)
        return {
            "pes": [
                {"id": p.pe_id, "type": p.pe_type, "active_power": p.active_power, "idle_power": p.idle_power}
                for p in self.pes
            ],
            "bandwidth": [[None if i == j else self.bandwidth[i][j] for j in range(n)] for i in range(n)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Platform":
        pes = [
            PeProfile(int(p["id"]), int(p["type"]), float(p["active_power"]), float(p["idle_power"]))
            for p in data["pes"]
        ]
        bw = [[0.0 if v is None else v for v in row] for row in data["bandwidth"]]
        return cls(pes, bw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Platform":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_platform() -> Platform:
    """Four PEs: one fast/hungry, two medium, one slow/frugal."""
    pes = [
        PeProfile(0, 0, active_power=2.0, idle_power=0.2),
        PeProfile(1, 1, active_power=1.0, idle_power=0.1),
        PeProfile(2, 1, active_power=1.0, idle_power=0.1),
        PeProfile(3, 2, active_power=0.4, idle_power=0.04),
    ]
    bandwidth = [
        [0, 8, 8, 2],
        [8, 0, 4, 4],
        [8, 4, 0, 4],
        [2, 4, 4, 0],
    ]
    return Platform(pes, bandwidth)
