class ValidationError(RuntimeError):
    """An internal cross-check failed; the computation cannot be trusted."""
