"""
Exception hierarchy for the cocontact mechanics engine.

Everything the engine raises on purpose derives from ContactError, so the CLI
can map failures to exit codes in one place.
"""


class ContactError(Exception):
    """Base class for engine errors."""


class DomainError(ContactError, ValueError):
    """An elementary operation was evaluated on its singular set."""


class DenominatorVanishes(DomainError):
    """A quotient quantity was evaluated where its denominator is ~0."""


class NonSmoothWarning(UserWarning):
    """abs() was differentiated at 0; the returned derivative is a subgradient."""


class ExprSyntaxError(ContactError, ValueError):
    """Malformed expression text. `offset` is the byte offset of the offender."""

    def __init__(self, message: str, source: str = "", offset: int = 0):
        self.source = source
        self.offset = offset
        super().__init__(f"{message} at byte {offset}" if source else message)


class UnknownIdentifier(ContactError, ValueError):
    def __init__(self, name: str, offset: int = 0):
        self.name = name
        self.offset = offset
        super().__init__(f"Unknown identifier '{name}' at byte {offset}")


class UnboundParam(ContactError, ValueError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Parameter '{name}' has no value")


class ChartKindError(ContactError, ValueError):
    """An operation was asked for on the wrong kind of chart."""


class DependenceError(ContactError, ValueError):
    """A field depends on coordinates it was declared not to depend on."""


class RegularityError(ContactError, ValueError):
    """The velocity Hessian of a Lagrangian is (numerically) singular."""


class NewtonNoConvergence(ContactError):
    def __init__(self, message: str, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class StepFailure(ContactError):
    """The integrator could not make progress."""


class SampleDomainError(ContactError):
    """The sampler could not produce enough points where the fields are defined."""


class JacobianSingular(ContactError):
    """A map's Jacobian is rank-deficient at a sample point."""


class UnknownExample(ContactError, LookupError):
    def __init__(self, name: str, known=()):
        self.name = name
        super().__init__(f"No built-in example named '{name}' (known: {', '.join(known)})")


class ParamSchemaError(ContactError, ValueError):
    """A parameter is missing, unknown or out of its allowed range."""


class SystemFileError(ContactError, ValueError):
    """A system-definition file could not be parsed."""
