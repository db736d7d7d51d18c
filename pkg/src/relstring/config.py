"""Global tolerance defaults.

None of these numbers come from the underlying mathematics; they are the
thresholds the library uses to decide when a discrete check has passed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class ToleranceConfig:
    # gauge conditions on analytic data
    gauge: float = 1e-8
    # unit-speed check for spline-backed profiles (cubic-spline accuracy)
    sampled_gauge: float = 1e-6
    # regularity: min |gamma'| allowed for reparametrizations
    regular: float = 1e-12
    # regularity for slices fed to the transport solver
    regular_slice: float = 1e-10
    # strict admissibility margin: |v| < 1 - admissible
    admissible: float = 1e-10
    # zero-mean velocity, relative to the period
    zero_mean: float = 1e-10
    # SubUnit slack on |a'| <= 1
    subunit: float = 1e-10
    # Lagrangian domain slack
    domain: float = 1e-12
    # |gamma_x| below which the energy integrand is set to 0
    degenerate: float = 1e-12
    # collapse detection, relative to the period
    collapse: float = 1e-6
    # singular set threshold on |gamma_x|
    singular: float = 1e-6
    # boundary slack of the inclusion test, relative to the period
    inclusion: float = 1e-10

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def with_overrides(self, overrides: dict[str, float]) -> "ToleranceConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


DEFAULT_TOLERANCES = ToleranceConfig()
