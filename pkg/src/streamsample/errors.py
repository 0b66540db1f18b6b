class SamplingError(Exception):
    """Base class for errors raised by streamsample."""


class InvalidCapacityError(SamplingError, ValueError):
    pass


class InvalidWeightError(SamplingError, ValueError):
    pass


class UsageError(SamplingError, TypeError):
    pass


class IncompatibleSamplerError(SamplingError, ValueError):
    pass


class InvalidRequestError(SamplingError, ValueError):
    pass


class ImpossibleSamplingError(InvalidRequestError):
    """Weighted sequential sampling without replacement was requested.

    Knowing only the total remaining weight does not determine the
    inclusion probability of the next item once earlier items have been
    taken, so no single-pass sequential method can produce a correctly
    weighted sample without replacement.
    """

    def __init__(self, msg: str | None = None):
        super().__init__(
            msg
            or "weighted sequential sampling without replacement is impossible: "
            "the total weight alone does not determine inclusion probabilities "
            "after the first selection; use a reservoir method (AlgARes/AlgAExpJ) "
            "or sample with replacement"
        )


class TruncatedStreamError(SamplingError):
    """The stream ended before the declared population or weight was consumed."""

    def __init__(self, msg: str, owed_items: int | None = None, owed_weight: float | None = None):
        super().__init__(msg)
        self.owed_items = owed_items
        self.owed_weight = owed_weight


class OracleCapacityError(SamplingError, ValueError):
    pass
