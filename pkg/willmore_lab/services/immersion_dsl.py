"""A small expression language for user-supplied immersions.

    (cosh(t)*cos(p), cosh(t)*sin(p), t)

Variables are t and p (x, y, phi and φ are accepted as aliases), the constant pi,
numeric literals, + - * /, integer powers with ^, and the functions sin, cos,
sinh, cosh, exp, log, sqrt and atan (one or two arguments). Expressions are
parsed with lark into a tree of frozen dataclasses and evaluated in jet
arithmetic.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from willmore_lab.exceptions import (
    ArityError,
    ConfigError,
    DslSyntaxError,
    InvalidParameterError,
    UnboundVariableError,
)
from willmore_lab.services.jet_engine import Jet2, atan2
from willmore_lab.services.surface_catalog import Domain2, ImmersionChart

logger = logging.getLogger(__name__)

GRAMMAR = r"""
?start: vector
      | sum

vector: "(" sum ("," sum)+ ")"

?sum: product
    | sum "+" product   -> add
    | sum "-" product   -> sub

?product: unary
        | product "*" unary   -> mul
        | product "/" unary   -> div

?unary: power
      | "-" unary   -> neg
      | "+" unary

?power: atom
      | atom "^" SIGNED_INT   -> pow

?atom: NUMBER                          -> number
     | NAME "(" sum ("," sum)* ")"     -> call
     | NAME                            -> var
     | "(" sum ")"

NAME: /[^\W\d]\w*/

%import common.NUMBER
%import common.SIGNED_INT
%import common.WS
%ignore WS
"""

_parser = Lark(GRAMMAR, parser="lalr", propagate_positions=True)

VARIABLE_ALIASES = {"t": "t", "x": "t", "p": "p", "y": "p", "phi": "p", "φ": "p"}
CONSTANTS = {"pi": math.pi, "π": math.pi}
FUNCTION_ARITY = {
    "sin": (1,), "cos": (1,), "sinh": (1,), "cosh": (1,),
    "exp": (1,), "log": (1,), "sqrt": (1,), "atan": (1, 2),
}


# AST

@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def __str__(self) -> str:
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int

    def __str__(self) -> str:
        return f"({self.base}^{self.exponent})"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Vector:
    components: Tuple["Expr", ...]

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.components) + ")"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call, Vector]


@v_args(inline=True)
class _AstBuilder(Transformer):
    def number(self, token):
        return Num(float(token))

    def var(self, token):
        name = str(token)
        if name in CONSTANTS:
            return Num(CONSTANTS[name])
        return Var(VARIABLE_ALIASES.get(name, name))

    def call(self, name, *args):
        return Call(str(name), tuple(args), name.line, name.column)

    def add(self, a, b):
        return BinOp("+", a, b)

    def sub(self, a, b):
        return BinOp("-", a, b)

    def mul(self, a, b):
        return BinOp("*", a, b)

    def div(self, a, b):
        return BinOp("/", a, b)

    def neg(self, a):
        return Neg(a)

    def pow(self, base, exponent):
        return Pow(base, int(exponent))

    def vector(self, *components):
        return Vector(tuple(components))


def _walk(node: Expr):
    yield node
    for child in _children(node):
        yield from _walk(child)


def _children(node: Expr) -> Tuple[Expr, ...]:
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return node.left, node.right
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Call):
        return node.args
    if isinstance(node, Vector):
        return node.components
    return ()


def _validate(root: Expr) -> None:
    if not isinstance(root, Vector) or len(root.components) != 3:
        found = len(root.components) if isinstance(root, Vector) else 1
        raise ArityError(f"An immersion needs 3 components, got {found}", {"components": found})
    nodes = list(_walk(root))
    for node in nodes:
        if isinstance(node, Vector) and node is not root:
            raise ArityError("Vectors may only appear at the top level")
        if isinstance(node, Call):
            if node.name not in FUNCTION_ARITY:
                raise UnboundVariableError(
                    f"Unknown function {node.name!r} at line {node.line}, column {node.column}",
                    {"name": node.name},
                )
            if len(node.args) not in FUNCTION_ARITY[node.name]:
                raise ArityError(
                    f"{node.name} takes {' or '.join(map(str, FUNCTION_ARITY[node.name]))} "
                    f"argument(s), got {len(node.args)}",
                    {"function": node.name, "arguments": len(node.args)},
                )
    for node in nodes:
        if isinstance(node, Var) and node.name not in ("t", "p"):
            raise UnboundVariableError(f"Unbound variable {node.name!r}; use t and p", {"name": node.name})


def parse_immersion(src: str) -> Vector:
    """Parse and check a DSL expression; the result is a 3-component Vector."""
    try:
        tree = _parser.parse(src)
        root = _AstBuilder().transform(tree)
    except UnexpectedInput as e:
        line, column = getattr(e, "line", -1), getattr(e, "column", -1)
        first = (str(e).strip().splitlines() or [type(e).__name__])[0]
        raise DslSyntaxError(f"Syntax error in immersion: {first}", line, column)
    except VisitError as e:
        raise DslSyntaxError(f"Malformed immersion: {e.orig_exc}", -1, -1)
    _validate(root)
    return root


# Evaluation

def evaluate(node: Expr, env: Dict[str, Jet2]):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, BinOp):
        a, b = evaluate(node.left, env), evaluate(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        base = evaluate(node.base, env)
        if isinstance(base, Jet2):
            return base ** node.exponent if node.exponent >= 0 else base.power(node.exponent)
        return float(base) ** node.exponent
    if isinstance(node, Call):
        args = [evaluate(a, env) for a in node.args]
        like = env["t"]
        jets = [a if isinstance(a, Jet2) else Jet2.constant(
            float(a) + 0.0 * like.value, like.order, dtype=like.dtype) for a in args]
        if node.name == "atan":
            return jets[0].atan() if len(jets) == 1 else atan2(jets[0], jets[1])
        return getattr(jets[0], node.name)()
    if isinstance(node, Vector):
        return tuple(evaluate(c, env) for c in node.components)
    raise TypeError(f"Unknown node {node!r}")


def make_evaluator(ast: Vector):
    def evaluator(T: Jet2, P: Jet2):
        return evaluate(ast, {"t": T, "p": P})
    return evaluator


# Sources and files

DEFAULT_DOMAIN = Domain2.cylinder(-1.0, 1.0)


def parse_domain(spec: str) -> Domain2:
    parts = spec.split()
    if not parts:
        raise InvalidParameterError("Empty domain directive")
    kind, args = parts[0], parts[1:]
    try:
        numbers = [float(a) for a in args]
    except ValueError:
        raise InvalidParameterError(f"Domain bounds must be numbers, got {' '.join(args)!r}")
    if kind == "rectangle" and len(numbers) == 4:
        return Domain2.rectangle(*numbers)
    if kind == "flat-torus" and len(numbers) in (0, 2):
        return Domain2.flat_torus(*numbers)
    if kind == "cylinder" and len(numbers) == 2:
        return Domain2.cylinder(*numbers)
    if kind == "punctured-disk" and len(numbers) in (0, 1):
        return Domain2.punctured_disk(*numbers)
    raise InvalidParameterError(f"Cannot read domain directive {spec!r}")


def chart_from_source(src: str, domain: Optional[Domain2] = None, conformal: Optional[bool] = None,
                      label: str = "dsl") -> ImmersionChart:
    """Build a chart from DSL text; ``# domain:`` and ``# conformal:`` comment lines
    configure it unless overridden by the arguments."""
    directives: Dict[str, str] = {}
    body = []
    for line in src.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            key, sep, value = stripped.lstrip("#").partition(":")
            if sep:
                directives[key.strip().lower()] = value.strip()
            continue
        body.append(line)
    ast = parse_immersion("\n".join(body))
    if domain is None:
        domain = parse_domain(directives["domain"]) if "domain" in directives else DEFAULT_DOMAIN
    if conformal is None:
        conformal = directives.get("conformal", "false").lower() in ("true", "yes", "1")
    logger.debug("Parsed DSL chart %s on %s", ast, domain.kind)
    return ImmersionChart(label, domain, make_evaluator(ast), conformal=conformal)


def load_dsl_file(path: Union[str, Path]) -> ImmersionChart:
    path = Path(path)
    try:
        src = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read DSL file {path}: {e.strerror}", {"path": str(path)})
    return chart_from_source(src, label=path.stem)


def component_functions(src: str) -> Sequence[str]:
    """The three component expressions of ``src`` in canonical printed form."""
    return [str(c) for c in parse_immersion(src).components]
