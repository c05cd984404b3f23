"""Shared exception types."""


class TransportError(RuntimeError):
    """A backend call failed for infrastructure reasons (network, 5xx).

    Retryable; distinct from a semantic grounding/tracking failure.
    """


class SchemaError(ValueError):
    """A wire payload or stored record violates the protocol schema."""


class DatasetError(ValueError):
    """An annotation record failed validation.

    Carries enough context (record index, offending field) to locate the
    bad record in the source file.
    """

    def __init__(self, message: str, record_index: int | None = None, field: str | None = None):
        self.record_index = record_index
        self.field = field
        detail = message
        if record_index is not None:
            detail += f" (record {record_index}"
            detail += f", field {field!r})" if field else ")"
        super().__init__(detail)
