"""Exception hierarchy.

The CLI maps :class:`HypothesisError` and :class:`PremiseError` (and their
subclasses) to exit code 2, everything else derived from
:class:`CurvTensorError` to exit code 1.
"""


class CurvTensorError(Exception):
    code = "error"


class ContextError(CurvTensorError):
    """Objects from different spaces, or shapes that do not match the space."""

    code = "context_mismatch"


class KindError(CurvTensorError):
    """An operator does not satisfy its declared adjoint kind."""

    code = "kind_mismatch"


class ConstraintError(CurvTensorError):
    code = "infeasible_constraint"


class DomainError(CurvTensorError):
    code = "domain_error"


class KernelError(CurvTensorError):
    code = "trivial_kernel"


class SamplingError(CurvTensorError):
    code = "sampling_failed"


class VerificationError(CurvTensorError):
    """An internal consistency re-check failed. Always a bug or a falsification."""

    code = "verification_failed"


class HypothesisError(CurvTensorError):
    """A theorem hypothesis is not met, so its conclusion is not claimed."""

    code = "hypothesis_unmet"


class NotAChainError(HypothesisError):
    code = "not_a_chain"


class PremiseError(CurvTensorError):
    """The premise sum of a conditional theorem does not vanish."""

    code = "premise_failed"
