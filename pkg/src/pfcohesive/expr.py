"""Small arithmetic-expression grammar for user-supplied scalar maps.

Grammar (one free variable ``t``)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | power
    power  := atom ('^' factor)?
    atom   := number | 't' | 'pi' | 'e' | func '(' expr (',' expr)* ')' | '(' expr ')'
    func   := exp | log | sqrt | sin | asin | acos | acosh | tanh | atanh | min | max

``^`` is right-associative and binds tighter than unary minus, so
``-t^2`` means ``-(t^2)``.  Parsing reuses Python's expression parser
after mapping ``^`` to ``**``; the resulting tree is checked against a
whitelist before evaluation.  Evaluation is vectorized with numpy.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "asin": np.arcsin,
    "acos": np.arccos,
    "acosh": np.arccosh,
    "tanh": np.tanh,
    "atanh": np.arctanh,
    "min": np.minimum,
    "max": np.maximum,
}
CONSTANTS = {"pi": np.pi, "e": np.e}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.divide, ast.Pow: np.power}


class ExpressionError(ValueError):
    pass


def _check(node: ast.AST, variable: str) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variable)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} is not allowed")
        _check(node.left, variable)
        _check(node.right, variable)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError("only unary + and - are allowed")
        _check(node.operand, variable)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function in {ast.unparse(node)!r}")
        if node.keywords:
            raise ExpressionError("keyword arguments are not allowed")
        nargs = len(node.args)
        if node.func.id in ("min", "max"):
            if nargs < 2:
                raise ExpressionError(f"{node.func.id} needs at least two arguments")
        elif nargs != 1:
            raise ExpressionError(f"{node.func.id} takes one argument")
        for a in node.args:
            _check(a, variable)
    elif isinstance(node, ast.Name):
        if node.id != variable and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r} (the variable is {variable!r})")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"bad literal {node.value!r}")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} is not allowed")


def _eval(node: ast.AST, t: np.ndarray, variable: str):
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, t, variable), _eval(node.right, t, variable))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, t, variable)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        args = [_eval(a, t, variable) for a in node.args]
        f = FUNCTIONS[node.func.id]
        if node.func.id in ("min", "max"):
            out = args[0]
            for a in args[1:]:
                out = f(out, a)
            return out
        return f(args[0])
    if isinstance(node, ast.Name):
        return t if node.id == variable else CONSTANTS[node.id]
    return float(node.value)


@dataclass(frozen=True, eq=False)
class Expression:
    """A parsed expression, callable on arrays."""

    source: str
    tree: ast.Expression
    variable: str = "t"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(self.tree.body, t, self.variable)
        return np.broadcast_to(np.asarray(out, dtype=float), t.shape).copy() if t.shape else float(out)

    def to_string(self) -> str:
        return ast.unparse(self.tree).replace("**", "^")

    def __str__(self) -> str:
        return self.to_string()


def parse(source: str, variable: str = "t") -> Expression:
    """Parse ``source`` into a vectorized callable.

    Raises:
        ExpressionError: on syntax errors or disallowed constructs.
    """
    if "**" in source:
        raise ExpressionError("use ^ for powers")
    try:
        tree = ast.parse(source.replace("^", "**").strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    _check(tree, variable)
    return Expression(source, tree, variable)
