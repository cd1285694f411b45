"""Central tolerance record.

Every numerical threshold used by the engine lives here so that convergence
studies only need to turn one knob.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

# Fields that are step sizes or structural thresholds rather than acceptance
# tolerances; ``scaled`` leaves them alone.
_UNSCALED = frozenset({"fd_step", "pd_pivot", "max_condition", "rank_rel", "plane_gram"})


@dataclass(frozen=True)
class Tolerances:
    fd_step: float = 1e-4
    pd_pivot: float = 1e-10
    max_condition: float = 1e12
    metric_symmetry: float = 1e-12
    rank_rel: float = 1e-7
    frame: float = 1e-9
    plane_gram: float = 1e-12
    isometry: float = 1e-6
    sff: float = 1e-4
    gauss: float = 1e-3
    harmonic: float = 1e-6
    structure: float = 1e-9
    xi: float = 1e-6
    slack: float = 1e-4
    equality: float = 1e-5
    consistency: float = 1e-9

    def scaled(self, factor: float) -> "Tolerances":
        """Multiply every acceptance tolerance by ``factor``."""
        if not factor > 0:
            raise ValueError(f"tolerance scale must be positive, got {factor}")
        changes = {
            f.name: getattr(self, f.name) * factor
            for f in fields(self)
            if f.name not in _UNSCALED
        }
        return replace(self, **changes)

    def with_overrides(self, overrides: dict) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance field(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
