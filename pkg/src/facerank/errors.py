"""Exception types shared across the package.

The CLI maps these onto exit codes: input/data problems exit with 2,
numeric/solver failures with 3.
"""


class FacerankError(Exception):
    """Base class for all package errors."""


class InputError(FacerankError):
    """Bad or missing input data (CLI exit code 2)."""


class NumericError(FacerankError):
    """Numeric failure in a solver or metric (CLI exit code 3)."""


class ParseError(InputError):
    """A manifest or sidecar file could not be parsed."""


class DanglingReference(InputError):
    """A pair or sidecar row points at an unknown image or face."""


class InvariantViolation(InputError):
    """A record violates a structural invariant (zero-area box, dup id, ...)."""


class EmptyJudgmentSet(InputError):
    """Aggregation requested on a pair left with no judgments."""


class MissingPixels(InputError):
    """An operation needs image pixels that were not provided."""


class MissingSaliency(InputError):
    """Saliency baseline requested without a map or fixations."""


class MissingFixations(InputError):
    """Fixation data required but absent for an image."""


class MissingSentence(InputError):
    """Description selection found a face without a sentence."""


class EmptyInput(InputError):
    """A metric was called on an empty prediction/truth list."""


class LengthMismatch(InputError):
    """Two aligned sequences or vectors differ in length."""


class TooFewPairs(InputError):
    """Cross-validation needs at least as many pairs as folds."""


class InsufficientJudgments(InputError):
    """Leave-one-human-out needs >= 2 judgments on every evaluated pair."""


class UnknownItem(InputError):
    """A rating outcome references an item outside the item set."""


class ItemSetMismatch(InputError):
    """Two rankings do not cover the same items."""


class DegenerateInput(NumericError):
    """Training set too small or structurally unusable."""


class StateUnavailable(FacerankError):
    """The model no longer carries the dual state needed for diagnostics."""
