class ValidationError(ValueError):
    """Raised for malformed inputs: bad documents, CSV rows, or out-of-range parameters."""
