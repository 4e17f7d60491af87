"""Mitigation settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

ZNE_FITS = ("linear", "quadratic", "exponential")


@dataclass(frozen=True)
class MitigationPlan:
    """Which mitigation stages run and with how many randomizations.

    ``trajectories`` caps the noise trajectories simulated per executed
    circuit (``None`` means one per shot).
    """

    trex_samples: int = 10
    twirl_instances: int = 10
    zne_factors: tuple[int, ...] = (1, 3, 5)
    zne_fit: str = "linear"
    dd_enabled: bool = True
    trex_enabled: bool = True
    trex_calibrate: bool = True
    twirl_enabled: bool = True
    zne_enabled: bool = True
    trajectories: int | None = None
    dd_durations: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "zne_factors", tuple(int(k) for k in self.zne_factors))
        ks = self.zne_factors
        if not ks or ks[0] != 1:
            raise ValueError("zne_factors must start at 1")
        if any(k % 2 == 0 or k < 1 for k in ks):
            raise ValueError("zne_factors must be odd positive integers")
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("zne_factors must be strictly ascending")
        if self.zne_fit not in ZNE_FITS:
            raise ValueError(f"zne_fit must be one of {ZNE_FITS}")
        if self.trex_samples < 1 or self.twirl_instances < 1:
            raise ValueError("sample counts must be >= 1")
        if self.trajectories is not None and self.trajectories < 1:
            raise ValueError("trajectories must be >= 1 when given")

    @classmethod
    def disabled(cls) -> "MitigationPlan":
        return cls(
            dd_enabled=False, trex_enabled=False, twirl_enabled=False, zne_enabled=False
        )

    @property
    def active_factors(self) -> tuple[int, ...]:
        return self.zne_factors if self.zne_enabled else (1,)

    @property
    def active_instances(self) -> int:
        return self.twirl_instances if self.twirl_enabled else 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["zne_factors"] = list(self.zne_factors)
        d["dd_durations"] = dict(sorted(self.dd_durations.items()))
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "MitigationPlan":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown mitigation keys: {sorted(unknown)}")
        kw = dict(data)
        if "zne_factors" in kw:
            kw["zne_factors"] = tuple(kw["zne_factors"])
        return cls(**kw)
