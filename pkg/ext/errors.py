from __future__ import annotations

from typing import Any, Iterable, List, Optional


class LabError(Exception):
    """Base class for every error raised by ulamlab"""
    verdict = 'engine-failure'

    @property
    def witness(self) -> Any:
        return None


class ConfigurationError(LabError):
    """Exception raised when a scenario config, window or budget is invalid.

    Attributes
    -----------
    problems: :class:`list`
        Every problem found, not just the first.
    """
    verdict = 'config-error'

    def __init__(self, problems: Iterable[str], *args: Any) -> None:
        self.problems: List[str] = list(problems) if not isinstance(problems, str) else [problems]
        super().__init__('; '.join(self.problems), *args)


class DomainRangeError(LabError):
    """Exception raised when a semigroup result leaves the domain's declared extent"""
    def __init__(self, element: Any, domain: Any) -> None:
        self.element = element
        self.domain = domain
        super().__init__(f'{element} lies outside the extent of {domain}')

    @property
    def witness(self) -> Any:
        return repr(self.element)


class OutsideWindow(DomainRangeError):
    """Exception raised when a map is read outside the evaluated window"""
    def __init__(self, element: Any) -> None:
        self.element = element
        self.domain = 'the evaluated window'
        LabError.__init__(self, f'{element!r} lies outside the evaluated window')


class RepresentabilityError(LabError):
    """Exception raised when an exact value is not a point of the domain's grid"""
    def __init__(self, value: Any, domain: Any) -> None:
        self.value = value
        self.domain = domain
        super().__init__(f'{value} is not representable on {domain}')

    @property
    def witness(self) -> Any:
        return str(self.value)


class ExpressionSyntaxError(LabError):
    """Exception raised when an expression fails to parse.

    Attributes
    -----------
    offset: :class:`int`
        Byte offset of the offending token.
    expected: :class:`list`
        Sorted token descriptions that would have been accepted.
    """
    verdict = 'config-error'

    def __init__(self, source: str, offset: int, expected: Iterable[str]) -> None:
        self.source = source
        self.offset = offset
        self.expected = sorted(set(expected))
        found = source[offset:offset + 1] or 'end of input'
        super().__init__(f'syntax error at offset {offset} ({found!r}), expected one of: {", ".join(self.expected)}')


class UnknownIdentifier(LabError):
    """Exception raised when an expression names something its context does not provide"""
    verdict = 'config-error'

    def __init__(self, name: str, offset: int) -> None:
        self.name = name
        self.offset = offset
        super().__init__(f'unknown identifier {name!r} at offset {offset}')


class EvaluationError(LabError):
    """Exception raised when an expression cannot be evaluated at a point"""
    pass


class ControlError(LabError):
    """Exception raised when a control function is negative or not real on the window"""
    verdict = 'hypotheses-not-met'

    def __init__(self, name: str, element: Any, value: Any) -> None:
        self.name = name
        self.element = element
        self.value = value
        super().__init__(f'control {name} is not a nonnegative real at {element}: {value}')

    @property
    def witness(self) -> Any:
        return {'control': self.name, 'at': repr(self.element), 'value': str(self.value)}


class HypothesisViolation(LabError):
    """Exception raised when a stability hypothesis fails on the window.

    Attributes
    -----------
    condition: :class:`str`
        Name of the first violated condition.
    """
    verdict = 'hypotheses-not-met'

    def __init__(self, condition: str, witness: Any=None, details: Optional[dict]=None) -> None:
        self.condition = condition
        self._witness = witness
        self.details = details or {}
        message = f'hypothesis {condition} violated'
        if witness is not None:
            message += f' at {witness}'
        super().__init__(message)

    @property
    def witness(self) -> Any:
        return self._witness


class PreconditionViolation(HypothesisViolation):
    """Exception raised when an operation's precondition fails"""
    verdict = 'precondition-failed'


class NoCertificate(LabError):
    """Exception raised when the stability hypotheses are unsatisfiable for an instance"""
    verdict = 'no-certificate'

    def __init__(self, reason: str, details: Optional[dict]=None) -> None:
        self.reason = reason
        self.details = details or {}
        super().__init__(reason)


class NotApplicable(LabError):
    """Exception raised on the infinite-distance branch of the fixed point alternative"""
    verdict = 'not-applicable'

    def __init__(self, reason: str='d(Jf, f) is infinite') -> None:
        self.reason = reason
        super().__init__(reason)


class ContractionViolation(LabError):
    """Exception raised when iterates contract slower than the declared Lipschitz constant"""
    def __init__(self, declared: float, observed: List[float]) -> None:
        self.declared = declared
        self.observed = observed
        super().__init__(f'declared L={declared} but observed ratios {observed}')

    @property
    def witness(self) -> Any:
        return {'declared': self.declared, 'observed': self.observed}


class DegenerateSample(LabError):
    """Exception raised when every sample pair has zero distance"""
    def __init__(self) -> None:
        super().__init__('all sample distances are zero')


class EngineInconsistency(LabError):
    """Exception raised when limits that must coincide disagree beyond tolerance"""
    def __init__(self, witness: Any, difference: float) -> None:
        self._witness = witness
        self.difference = difference
        super().__init__(f'limits disagree by {difference} at {witness}')

    @property
    def witness(self) -> Any:
        return self._witness


class NotConverged(LabError):
    """Exception raised when an iteration stops on max-steps or overflow without converging"""
    verdict = 'not-certified'

    def __init__(self, stop_reason: str, steps: int) -> None:
        self.stop_reason = stop_reason
        self.steps = steps
        super().__init__(f'iteration stopped on {stop_reason} after {steps} steps')

    @property
    def witness(self) -> Any:
        return {'stop_reason': self.stop_reason, 'steps': self.steps}


class WindowExhausted(LabError):
    """Exception raised when an orbit leaves the evaluated region before convergence"""
    def __init__(self, element: Any, depth: int) -> None:
        self.element = element
        self.depth = depth
        super().__init__(f'orbit left the evaluated region at {element} after {depth} certified steps')

    @property
    def witness(self) -> Any:
        return {'element': repr(self.element), 'depth': self.depth}
