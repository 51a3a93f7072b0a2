"""Exception types shared across the toolkit.

Two error families matter to callers: :class:`DataError` for inputs that
cannot be loaded or fail validation, and :class:`MethodError` for
anonymization runs that cannot proceed on otherwise valid data.  The
command-line layer maps them to distinct exit codes.
"""

from __future__ import annotations


class MicroanonError(Exception):
    """Base class for all toolkit errors."""


class DataError(MicroanonError):
    """Raised when input data cannot be loaded or fails validation.

    Covers missing files, header/schema mismatches, unparseable cells,
    shape mismatches between datasets, and invalid schema documents.
    """


class MethodError(MicroanonError):
    """Raised when an anonymization method cannot run with the given parameters."""


class KTooLargeError(MethodError):
    """The privacy parameter k is infeasible for the dataset at hand."""

    def __init__(self, k: int, max_feasible_k: int, detail: str = ""):
        self.k = k
        self.max_feasible_k = max_feasible_k
        msg = f"k={k} is infeasible; the largest feasible k here is {max_feasible_k}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ClassTooSmallError(MethodError):
    """A confidential class has fewer than k members, so no diverse group can keep k of it.

    ``max_feasible_k`` is the smallest class size, i.e. the largest k that
    would satisfy the per-class precondition.
    """

    def __init__(self, k: int, min_class_size: int, sub_index: int | None = None):
        self.k = k
        self.max_feasible_k = min_class_size
        self.sub_index = sub_index
        where = f" in sub-microdata {sub_index}" if sub_index is not None else ""
        super().__init__(
            f"a confidential class{where} has only {min_class_size} members, "
            f"fewer than k={k}; lower k to at most {min_class_size}"
        )


class DegenerateModelError(MethodError):
    """A cluster model cannot be validity-scored (coincident centers, empty clusters)."""
