"""Measured spin configurations with counts and energies."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class SampleRecord:
    config: tuple[int, ...]
    count: int
    energy: float


@dataclass(frozen=True)
class SampleSet:
    """Aggregated measurement outcomes from a batch of anneals.

    ``shots`` always equals the sum of record counts; an empty set
    (shots=0) is legal and arises when slack filtering removes everything.
    """

    shots: int
    records: tuple[SampleRecord, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        counted = sum(r.count for r in self.records)
        if counted != self.shots:
            raise ValueError(f"record counts sum to {counted}, expected shots={self.shots}")

    def __len__(self) -> int:
        return len(self.records)

    def best_energy(self) -> SampleRecord:
        """Record with the lowest energy (ties: first in stored order)."""
        if not self.records:
            raise ValueError("empty sample set has no best record")
        return min(self.records, key=lambda r: r.energy)

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "records": [
                {"config": list(r.config), "count": r.count, "energy": r.energy}
                for r in self.records
            ],
            "meta": self.meta,
        }


def sampleset_from_dict(data: dict) -> SampleSet:
    records = tuple(
        SampleRecord(config=tuple(int(v) for v in r["config"]),
                     count=int(r["count"]), energy=float(r["energy"]))
        for r in data["records"]
    )
    return SampleSet(shots=int(data["shots"]), records=records, meta=dict(data.get("meta", {})))


def sampleset_to_json(samples: SampleSet) -> str:
    return json.dumps(samples.to_dict(), sort_keys=True)


def sampleset_from_json(text: str) -> SampleSet:
    return sampleset_from_dict(json.loads(text))
