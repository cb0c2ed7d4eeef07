"""Exception hierarchy for the sfpg package."""


class SfpgError(Exception):
    """Base class for all sfpg-specific failures."""


# --- ground-state / propagation ---

class NonConvergence(SfpgError):
    """Imaginary-time relaxation stalled above the requested tolerance."""


class RootBracketFailure(SfpgError):
    """No softening parameter inside the search bracket hits the target energy."""


class BoundaryLeak(SfpgError):
    """Bound-state amplitude at the grid edge exceeds the leak threshold."""


class NumericalBlowup(SfpgError):
    """Non-finite amplitude encountered during propagation."""


class ExcessiveAbsorption(SfpgError):
    """More than half the norm was absorbed; results are unreliable."""


# --- spectra ---

class TooShortRecord(SfpgError):
    """Dipole record covers fewer than two optical cycles."""


class NotConnected(SfpgError):
    """A raw (non-connected) correlator was passed where connected is required."""


class NoPlateauDetected(SfpgError):
    """The cutoff estimator could not locate a plateau/drop structure."""


class WindowTooNarrow(SfpgError):
    """Gabor window narrower than four stored time steps."""


# --- macroscopic ---

class PhaseMatchDomainError(SfpgError):
    """Phase-matching argument left its physical domain."""


class BandMismatch(SfpgError):
    """Requested frequency band is not covered by the supplied spectrum."""


# --- quantum state ---

class EmptyAcceptance(SfpgError):
    """Angular-acceptance mask removed all amplitude from the JSA."""


class EmptyHerald(SfpgError):
    """Herald filter has no support inside the JSA band."""


class SvdFailure(SfpgError):
    """Singular value decomposition did not converge."""


# --- orchestration ---

class ConfigParseError(SfpgError):
    """Invalid configuration file; message carries the offending key path."""


class CacheMismatch(SfpgError):
    """Cached file header or payload disagrees with the requested parameters."""


class StageDependencyMissing(SfpgError):
    """A pipeline stage was requested without its inputs being computable."""
