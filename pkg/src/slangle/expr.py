"""Tiny arithmetic expression evaluator for boundary data given as text.

Supports +, -, *, /, ** (also ^), unary minus, parentheses, numeric
literals, the names t, x, y, r, pi, and the functions sin, cos, exp, min,
max, abs, sqrt, arctan.  Everything else is rejected.  Evaluation is
vectorized over numpy arrays.
"""

from __future__ import annotations

import ast
import functools

import numpy as np

from .errors import DomainError

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "arctan": np.arctan,
    "abs": np.abs,
    "min": lambda *a: functools.reduce(np.minimum, a),
    "max": lambda *a: functools.reduce(np.maximum, a),
}

_ALLOWED_NAMES = {"t", "x", "y", "r"}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


def _eval_node(node: ast.AST, env: dict):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, env)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise DomainError(f"literal {node.value!r} not allowed")
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return np.pi
        if node.id in env:
            return env[node.id]
        raise DomainError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp):
        op = _BINOPS.get(type(node.op))
        if op is None:
            raise DomainError(f"operator {type(node.op).__name__} not allowed")
        return op(_eval_node(node.left, env), _eval_node(node.right, env))
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return -_eval_node(node.operand, env)
        if isinstance(node.op, ast.UAdd):
            return +_eval_node(node.operand, env)
        raise DomainError(f"operator {type(node.op).__name__} not allowed")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise DomainError("only sin, cos, exp, sqrt, arctan, abs, min, max calls allowed")
        if node.keywords:
            raise DomainError("keyword arguments not allowed")
        args = [_eval_node(a, env) for a in node.args]
        return _FUNCTIONS[node.func.id](*args)
    raise DomainError(f"syntax element {type(node).__name__} not allowed")


def compile_expression(text: str, variables: tuple[str, ...]):
    """Compile text into fn(*values) over the named variables."""
    for v in variables:
        if v not in _ALLOWED_NAMES:
            raise DomainError(f"variable {v!r} not supported")
    # Caret means power with the usual mathematical precedence.
    text = text.replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise DomainError(f"cannot parse expression: {exc}") from exc

    def fn(*values):
        if len(values) != len(variables):
            raise DomainError(
                f"expected {len(variables)} arguments, got {len(values)}"
            )
        env = dict(zip(variables, values))
        return _eval_node(tree, env)

    # Validate the node set eagerly with dummy arguments.
    fn(*([0.5] * len(variables)))
    return fn
