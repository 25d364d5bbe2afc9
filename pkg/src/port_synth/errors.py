"""Exception hierarchy shared by every stage of the synthesis pipeline."""


class PortSynthError(Exception):
    """Base class for all errors raised by :mod:`port_synth`."""


class InputError(PortSynthError):
    """Invalid user input (configuration, parameters)."""


class ParseError(InputError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class ValidationError(InputError):
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class NumericalError(PortSynthError):
    """A numerical precondition failed somewhere in the algebra."""


# polynomial / rational algebra
class ZeroPolynomial(NumericalError):
    pass


class ConstantPolynomial(NumericalError):
    pass


class PoleHit(NumericalError):
    pass


class PoleOnAxis(NumericalError):
    pass


# realization
class NotStrictlyProper(NumericalError):
    pass


class SingularSylvester(NumericalError):
    pass


class NotAntistable(NumericalError):
    pass


class AxisPole(NumericalError):
    pass


class RepeatedPole(NumericalError):
    pass


# coprime
class NotProper(NumericalError):
    pass


class QCollision(NumericalError):
    pass


class NotCoprime(NumericalError):
    pass


class MismatchedQ(NumericalError):
    pass


# hinf
class AxisZero(NumericalError):
    pass


class NotSymmetric(NumericalError):
    pass


class NotPositive(NumericalError):
    pass


class BetaTooSmall(NumericalError):
    pass


class Infeasible(PortSynthError):
    """No stable parameter meets the model-matching requirement."""


# synthesis
class FitFailed(NumericalError):
    pass


class SingularParametrization(NumericalError):
    pass


class DegenerateSum(NumericalError):
    pass


