"""Exception types raised by the solvers and tools."""


class SimulationError(RuntimeError):
    """Base class for runtime failures (exit status 3 from the CLI)."""

    kind = "runtime"

    def fields(self):
        return {}


class NormDriftError(SimulationError):
    kind = "norm_drift"

    def __init__(self, t, drift, limit):
        super().__init__(f"norm drift {drift:.3e} exceeds {limit:.1e} at t={t:.6g}")
        self.t, self.drift, self.limit = t, drift, limit

    def fields(self):
        return {"t": self.t, "drift": self.drift}


class CausticError(SimulationError):
    """The action field lost regularity; carries the :class:`CausticReport`."""

    kind = "caustic"

    def __init__(self, report):
        super().__init__(
            f"caustic at t={report.time:.6g}, x={tuple(report.location)}, "
            f"max|lap S|={report.value:.4g}"
        )
        self.report = report

    def fields(self):
        return {"t": self.report.time, "value": self.report.value}


class ClampBudgetError(SimulationError):
    kind = "clamp_budget"


class MaskedRegionError(SimulationError):
    kind = "masked_region"


class LostCrestError(SimulationError):
    kind = "lost_crest"


class SamplingError(SimulationError):
    kind = "sampling"


class OverlapError(ValueError):
    """Supports that must be disjoint overlap above tolerance."""


class ConfigError(ValueError):
    """Invalid scenario configuration (exit status 2 from the CLI)."""
