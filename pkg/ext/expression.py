"""The arithmetic expression language used for maps and controls.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? power
    power  := atom ('^' factor)?
    atom   := number | 'i' | 'pi' | 'e' | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

Expressions evaluate over complex numbers. ``ln`` and ``sqrt`` are principal
branches. ``evaluate_exact`` evaluates the rational fragment exactly.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union

from ext.algebra import principal
from ext.errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifier

CONSTANTS = ('i', 'pi', 'e')

# name -> (min args, max args)
FUNCTIONS: Dict[str, Tuple[int, int]] = {
    'exp': (1, 1),
    'ln': (1, 1),
    'sin': (1, 1),
    'cos': (1, 1),
    'abs': (1, 1),
    'sqrt': (1, 1),
    'pow': (2, 2),
    'min': (1, 64),
    'max': (1, 64),
    'gamma': (1, 1),
}

TOKEN_REGEX = re.compile(r'''
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
''', re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


@dataclass(frozen=True)
class Number:
    text: str

    @property
    def value(self) -> Fraction:
        return Fraction(self.text)


@dataclass(frozen=True)
class Constant:
    name: str


@dataclass(frozen=True)
class Variable:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Negate:
    operand: Node


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple[Node, ...]
    offset: int = field(default=0, compare=False)


Node = Union[Number, Constant, Variable, Negate, BinaryOp, Call]


def tokenize(source: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        match = TOKEN_REGEX.match(source, pos)
        if not match:
            raise ExpressionSyntaxError(source, _byte_offset(source, pos), ['number', 'identifier', 'operator'])
        kind = match.lastgroup
        if kind != 'space':
            tokens.append(Token(kind, match.group(), _byte_offset(source, pos)))
        pos = match.end()
    tokens.append(Token('end', '', len(source.encode('utf8'))))
    return tokens


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode('utf8'))


ATOM_START = ('number', 'identifier', '(')


class Parser:
    def __init__(self, source: str) -> None:
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def at(self, *ops: str) -> bool:
        return self.current.kind == 'op' and self.current.text in ops

    def fail(self, expected: Iterable[str]) -> ExpressionSyntaxError:
        return ExpressionSyntaxError(self.source, self.current.offset, expected)

    def parse(self) -> Node:
        if self.current.kind == 'end':
            raise self.fail(('-',) + ATOM_START)
        node = self.expr()
        if self.current.kind != 'end':
            raise self.fail(['+', '-', '*', '/', '^', 'end of input'])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.at('+', '-'):
            op = self.advance().text
            node = BinaryOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.at('*', '/'):
            op = self.advance().text
            node = BinaryOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.at('-'):
            self.advance()
            return Negate(self.power())
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.at('^'):
            self.advance()
            node = BinaryOp('^', node, self.factor())
        return node

    def atom(self) -> Node:
        token = self.current
        if token.kind == 'number':
            self.advance()
            return Number(token.text)
        if token.kind == 'ident':
            self.advance()
            if self.at('('):
                return self.call(token)
            if token.text in CONSTANTS:
                return Constant(token.text)
            if token.text in FUNCTIONS:
                raise self.fail(['('])
            return Variable(token.text, token.offset)
        if self.at('('):
            self.advance()
            node = self.expr()
            if not self.at(')'):
                raise self.fail([')', '+', '-', '*', '/', '^'])
            self.advance()
            return node
        raise self.fail(ATOM_START)

    def call(self, name: Token) -> Node:
        if name.text not in FUNCTIONS:
            raise UnknownIdentifier(name.text, name.offset)
        self.advance()
        args = [self.expr()]
        while self.at(','):
            self.advance()
            args.append(self.expr())
        if not self.at(')'):
            raise self.fail([',', ')', '+', '-', '*', '/', '^'])
        low, high = FUNCTIONS[name.text]
        if not low <= len(args) <= high:
            expected = f'{low} argument(s)' if low == high else f'{low} to {high} arguments'
            raise ExpressionSyntaxError(self.source, name.offset, [f'{expected} for {name.text}'])
        self.advance()
        return Call(name.text, tuple(args), name.offset)


def walk(node: Node) -> Iterator[Node]:
    yield node
    if isinstance(node, Negate):
        yield from walk(node.operand)
    elif isinstance(node, BinaryOp):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Call):
        for arg in node.args:
            yield from walk(arg)


def variables(node: Node) -> List[Variable]:
    return [n for n in walk(node) if isinstance(n, Variable)]


def parse(source: str, names: Optional[Iterable[str]]=None) -> Node:
    """Parses ``source``; with ``names`` every variable must be one of them"""
    tree = Parser(source).parse()
    if names is not None:
        allowed = set(names)
        for var in variables(tree):
            if var.name not in allowed:
                raise UnknownIdentifier(var.name, var.offset)
    return tree


PRECEDENCE = {'+': 1, '-': 1, '*': 2, '/': 2, '^': 4}


def to_source(node: Node) -> str:
    """Prints ``node`` with the fewest parentheses that reparse to the same tree"""
    if isinstance(node, Number):
        return node.text
    if isinstance(node, (Constant, Variable)):
        return node.name
    if isinstance(node, Call):
        return f'{node.name}({", ".join(to_source(a) for a in node.args)})'
    if isinstance(node, Negate):
        inner = to_source(node.operand)
        if isinstance(node.operand, Negate) or (isinstance(node.operand, BinaryOp) and node.operand.op != '^'):
            inner = f'({inner})'
        return f'-{inner}'

    left, right = to_source(node.left), to_source(node.right)
    prec = PRECEDENCE[node.op]
    if node.op == '^':
        if isinstance(node.left, (BinaryOp, Negate)):
            left = f'({left})'
        if isinstance(node.right, BinaryOp) and node.right.op != '^':
            right = f'({right})'
        return f'{left}^{right}'
    if isinstance(node.left, BinaryOp) and PRECEDENCE[node.left.op] < prec:
        left = f'({left})'
    if isinstance(node.right, BinaryOp) and PRECEDENCE[node.right.op] <= prec:
        right = f'({right})'
    return f'{left} {node.op} {right}'


Env = Mapping[str, complex]
Compiled = Callable[[Env], complex]


def _real(z: complex, name: str) -> float:
    if z.imag != 0:
        raise EvaluationError(f'{name} needs a real argument, got {z}')
    return z.real


def _unsigned(z: complex) -> complex:
    # -0.0 parts would put sqrt and powers on the far side of the branch cut
    z = complex(z)
    return complex(z.real + 0.0, z.imag + 0.0)


def _sqrt(z: complex) -> complex:
    return cmath.sqrt(_unsigned(z))


def power(a: complex, b: complex) -> complex:
    a, b = _unsigned(a), _unsigned(b)
    if a == 0:
        if b.imag == 0 and b.real > 0:
            return 0j
        if b == 0:
            return 1 + 0j
        raise EvaluationError(f'0 raised to {b}')
    if a.imag == 0 and b.imag == 0:
        base, exponent = a.real, b.real
        if base > 0:
            return complex(base ** exponent)
        if exponent.is_integer():
            return complex(base ** int(exponent))
    try:
        return a ** b
    except ZeroDivisionError:
        raise EvaluationError(f'{a} raised to {b}') from None


def _ln(z: complex) -> complex:
    if z == 0:
        raise EvaluationError('ln(0)')
    return principal(cmath.log(z))


def _gamma(z: complex) -> complex:
    x = _real(z, 'gamma')
    if x.is_integer():
        if x <= 0:
            raise EvaluationError(f'gamma has a pole at {x:g}')
        return complex(float(math.factorial(int(x) - 1)))
    return complex(math.gamma(x))


def _min(*args: complex) -> complex:
    return complex(min(_real(a, 'min') for a in args))


def _max(*args: complex) -> complex:
    return complex(max(_real(a, 'max') for a in args))


CALLABLES: Dict[str, Callable[..., complex]] = {
    'exp': cmath.exp,
    'ln': _ln,
    'sin': cmath.sin,
    'cos': cmath.cos,
    'abs': lambda z: complex(abs(z)),
    'sqrt': _sqrt,
    'pow': power,
    'min': _min,
    'max': _max,
    'gamma': _gamma,
}

CONSTANT_VALUES = {'i': 1j, 'pi': complex(math.pi), 'e': complex(math.e)}


def _divide(a: complex, b: complex) -> complex:
    if b == 0:
        raise EvaluationError('division by zero')
    return a / b


BINARY: Dict[str, Callable[[complex, complex], complex]] = {
    '+': lambda a, b: a + b,
    '-': lambda a, b: a - b,
    '*': lambda a, b: a * b,
    '/': _divide,
    '^': power,
}


def compile_node(node: Node) -> Compiled:
    """Compiles a tree into a closure over an environment of complex values.

    OverflowError is left to propagate so callers can flag overflow.
    """
    if isinstance(node, Number):
        value = complex(float(node.value))
        return lambda env: value
    if isinstance(node, Constant):
        value = CONSTANT_VALUES[node.name]
        return lambda env: value
    if isinstance(node, Variable):
        name = node.name

        def variable(env: Env) -> complex:
            try:
                return env[name]
            except KeyError:
                raise UnknownIdentifier(name, node.offset) from None
        return variable
    if isinstance(node, Negate):
        operand = compile_node(node.operand)
        return lambda env: 0j - operand(env)
    if isinstance(node, Call):
        fn = CALLABLES[node.name]
        args = [compile_node(a) for a in node.args]
        if len(args) == 1:
            only = args[0]
            return lambda env: fn(only(env))
        return lambda env: fn(*(a(env) for a in args))

    op = BINARY[node.op]
    left, right = compile_node(node.left), compile_node(node.right)
    return lambda env: op(left(env), right(env))


def evaluate_exact(node: Node, env: Mapping[str, Fraction]) -> Fraction:
    """Exact rational evaluation of + - * /, integer powers, abs, min and max"""
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Variable):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownIdentifier(node.name, node.offset) from None
    if isinstance(node, Negate):
        return -evaluate_exact(node.operand, env)
    if isinstance(node, Call) and node.name in ('abs', 'min', 'max'):
        args = [evaluate_exact(a, env) for a in node.args]
        return {'abs': lambda: abs(args[0]), 'min': lambda: min(args), 'max': lambda: max(args)}[node.name]()
    if isinstance(node, BinaryOp):
        left, right = evaluate_exact(node.left, env), evaluate_exact(node.right, env)
        if node.op == '+':
            return left + right
        if node.op == '-':
            return left - right
        if node.op == '*':
            return left * right
        if node.op == '/':
            if right == 0:
                raise EvaluationError('division by zero')
            return left / right
        if right.denominator == 1 and not (left == 0 and right < 0):
            return left ** int(right)
    raise EvaluationError(f'{to_source(node)} has no exact rational value')


class Expression:
    """A parsed expression with its source and compiled evaluator"""

    def __init__(self, source: str, names: Optional[Iterable[str]]=None) -> None:
        self.source = source
        self.tree = parse(source, names)
        self._compiled = compile_node(self.tree)

    def __repr__(self) -> str:
        return f'Expression({self.source!r})'

    def __str__(self) -> str:
        return to_source(self.tree)

    @property
    def identifiers(self) -> Set[str]:
        return {v.name for v in variables(self.tree)}

    def __call__(self, env: Env) -> complex:
        return self._compiled(env)

    def real(self, env: Env) -> float:
        return _real(self._compiled(env), self.source)

    def exact(self, env: Mapping[str, Fraction]) -> Fraction:
        return evaluate_exact(self.tree, env)

    def bind(self, params: Mapping[str, Any]) -> Expression:
        """Returns a copy whose evaluation also sees ``params``"""
        bound = Expression.__new__(Expression)
        bound.source = self.source
        bound.tree = self.tree
        constants = {k: complex(v) for k, v in params.items()}
        compiled = self._compiled

        def evaluate(env: Env) -> complex:
            return compiled({**constants, **env})
        bound._compiled = evaluate
        return bound
