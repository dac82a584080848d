from __future__ import annotations


class PolypermError(RuntimeError):
    """
    Base class for all library errors.
    """


class DimensionError(PolypermError, ValueError):
    """
    Shapes or lengths of inputs do not agree (exponent vectors, matrices, model widths).
    """


class NumericError(PolypermError, ValueError):
    """
    Non-finite input or intermediate value.
    """


class NotInvariantError(PolypermError):
    """
    A support set is not closed under the requested variable permutation.
    """


class CapacityError(PolypermError):
    """
    A configured capacity limit (n! cap, Bezout cap) is exceeded.
    """


class TemplateGenerationError(PolypermError):
    """
    The offline template could not be built (rank or basis-size failure after all retries).
    """


class NearDegenerateInstanceError(PolypermError):
    """
    An elimination pivot fell below the rank tolerance during an online solve.
    """


class EigenFailureError(PolypermError):
    """
    The eigen-decomposition of the action matrix failed or produced non-finite values.
    """


class AllFailedError(PolypermError):
    """
    Every permutation of an instance failed to produce a real root.
    """


class GenerationStalledError(PolypermError):
    """
    Dataset generation discarded too many instances to make progress.
    """


class FormatError(PolypermError, ValueError):
    """
    A template, dataset, model or CSV file is malformed, truncated or of an unsupported version.
    """


class TrainingError(PolypermError):
    """
    Training cannot start or diverged (non-finite loss).
    """
