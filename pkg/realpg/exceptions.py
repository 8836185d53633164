""" Exceptions raised by realpg.

The command line maps each class onto a process exit code, see
`realpg.app.cli`.
"""


# =============================================================================
# MODULE CLASSES
# =============================================================================
class RealpgError(Exception):
    """Base class for all errors raised by realpg."""


class ConfigError(RealpgError, ValueError):
    """Invalid or inconsistent configuration."""


class NumericalError(RealpgError, RuntimeError):
    """Non-finite logits, gradients or parameters.

    Parameters
    ----------
    message : str

    state : dict, optional
        Diagnostic snapshot (step, norms, offending indices) that the
        command line dumps to disk before exiting.
    """

    def __init__(self, message, state=None):
        super(NumericalError, self).__init__(message)
        self.state = state if state is not None else {}


class CompatibilityError(RealpgError, ValueError):
    """Checkpoint or dataset does not match the requested configuration."""


class EnumerationTooLargeError(RealpgError, ValueError):
    """Exact enumeration would exceed the configured bound."""


class DegenerateInputError(RealpgError, ValueError):
    """Input for which the requested quantity is undefined,
    e.g. a correlation with a zero-variance argument."""
