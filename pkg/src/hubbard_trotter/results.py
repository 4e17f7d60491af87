"""Result records shared by the mitigation pipeline and the sweep harness."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def _clean(obj):
    """JSON-safe copy: tuples become lists, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if hasattr(obj, "item") and callable(obj.item):
        return _clean(obj.item())
    return obj


@dataclass
class ExperimentPoint:
    """One observable estimate, optionally tied to a Trotter step count ``r``.

    ``value`` is the mean over ``values`` (one per repeat); ``spread`` is their
    population standard deviation.  ``wall_time`` is kept out of the canonical
    serialization unless requested, so reruns produce identical bytes.
    """

    value: float
    spread: float = 0.0
    values: list[float] = field(default_factory=list)
    r: int | None = None
    tau: float | None = None
    depth: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    wall_time: float | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "r": self.r,
            "tau": self.tau,
            "value": self.value,
            "spread": self.spread,
            "values": list(self.values),
            "depth": self.depth,
            "diagnostics": self.diagnostics,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
            d["timings"] = dict(self.timings)
        return _clean(d)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPoint":
        return cls(
            value=float(d["value"]),
            spread=float(d.get("spread", 0.0)),
            values=[float(v) for v in d.get("values", [])],
            r=d.get("r"),
            tau=d.get("tau"),
            depth=d.get("depth"),
            diagnostics=d.get("diagnostics", {}),
            wall_time=d.get("wall_time"),
            timings=dict(d.get("timings", {})),
        )


@dataclass
class ResultSet:
    """Points ordered by ``r`` plus the configuration that produced them.

    ``attachments`` holds in-memory side products (such as a truncation log)
    that are written to their own files rather than into the JSON record.
    """

    config: dict
    points: list[ExperimentPoint]
    attachments: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        rs = [p.r for p in self.points if p.r is not None]
        if rs != sorted(rs):
            raise ValueError("result points must be ordered by r")

    def to_dict(self, include_timing: bool = False) -> dict:
        return {
            "config": _clean(self.config),
            "points": [p.to_dict(include_timing) for p in self.points],
        }

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultSet":
        d = json.loads(text)
        return cls(d["config"], [ExperimentPoint.from_dict(p) for p in d["points"]])

    def timings(self) -> dict[str, dict]:
        """Per-point wall clock data, keyed by ``r``, for the timing sidecar."""
        return {str(p.r): {"wall_time": p.wall_time, **p.timings} for p in self.points}

    def merge_timings(self, data: dict[str, dict]) -> None:
        for p in self.points:
            entry = data.get(str(p.r))
            if entry:
                p.wall_time = entry.get("wall_time")
                p.timings = {k: v for k, v in entry.items() if k != "wall_time"}
