"""
Error hierarchy. Every error knows the exit code the CLI maps it to.
"""

from typing import Optional


class ForgeError(Exception):
    exit_code: int = 1


class ConfigError(ForgeError):
    """Bad or unknown configuration key, or an invalid value."""
    exit_code = 2


class InvariantError(ForgeError):
    """An identity that must hold exactly (to tolerance) was broken."""
    exit_code = 1

    def __init__(self, name: str, value: float, tolerance: float):
        self.name = name
        self.value = value
        self.tolerance = tolerance
        super().__init__(f"invariant '{name}' violated: {value:.3e} > {tolerance:.1e}")


class NumericalAbort(ForgeError):
    """Blow-up, NaN, or a precondition of the construction failed mid-run."""
    exit_code = 3

    def __init__(self, message: str, time: Optional[float] = None):
        self.time = time
        if time is not None:
            message = f"{message} (t={time:.6g})"
        super().__init__(message)


class R0Violation(NumericalAbort):
    """The mollified stress left the certified ball of the geometric lemma."""

    def __init__(self, time: float, ratio: float, r0: float):
        self.ratio = ratio
        self.r0 = r0
        super().__init__(
            f"‖R_ℓ‖/(Mδc_R^1/2) = {ratio:.4g} ≥ r0 = {r0:.4g}; c_R too large or stress too big",
            time=time,
        )


class DomainError(ValueError):
    """γ evaluated outside the certified r0-ball."""

    def __init__(self, norm: float, r0: float):
        self.norm = norm
        self.r0 = r0
        super().__init__(f"‖R − Id‖ = {norm:.6g} exceeds certified radius r0 = {r0:.6g}")


class RankError(ValueError):
    """Operation applied to a field of the wrong tensor rank."""
