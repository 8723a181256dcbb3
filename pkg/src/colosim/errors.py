"""Exception types shared across the simulator."""

from __future__ import annotations


class ConfigError(ValueError):
    """A scenario file or cluster/job specification violates an invariant."""


class DeadlockError(RuntimeError):
    """The event queue drained while at least one job still had work pending."""

    def __init__(self, job_id: str, iteration: int, detail: str = ""):
        self.job_id = job_id
        self.iteration = iteration
        msg = f"deadlock: job {job_id!r} stuck at iteration {iteration}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InvalidTraceError(ValueError):
    """A trace failed legality validation; carries the violation list."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__(
            "invalid trace: " + "; ".join(self.violations[:5])
            + ("" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)")
        )


class ComparisonError(ValueError):
    """Two metrics objects describe different job sets and cannot be compared."""
