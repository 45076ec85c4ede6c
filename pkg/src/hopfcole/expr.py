"""Closed-form potentials V(x) from a small expression vocabulary.

Allowed: numbers, the variable ``x``, the constants ``pi`` and ``e``,
``+ - * / **``, and the functions ``sin``, ``cos``, ``exp`` and
``poly(c0, c1, ...)`` = c0 + c1 x + c2 x^2 + ...
"""

from __future__ import annotations

import ast
import math
import operator

import numpy as np

from .errors import ConfigError

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": math.pi, "e": math.e}


def _poly(x, coeffs):
    # Horner from the highest coefficient
    out = np.zeros_like(x) + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = out * x + c
    return out


class Potential:
    """A parsed expression, callable on arrays of x (or rho) values."""

    def __init__(self, text: str):
        self.text = text.strip()
        try:
            tree = ast.parse(self.text or "0", mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse potential {text!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ConfigError(f"unsupported literal {node.value!r} in potential")
        elif isinstance(node, ast.Name):
            if node.id != "x" and node.id not in _CONSTS:
                raise ConfigError(f"unknown name {node.id!r} in potential")
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            self._check(node.operand)
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            name = node.func.id
            if name in _FUNCS and len(node.args) == 1:
                self._check(node.args[0])
            elif name == "poly" and node.args:
                for a in node.args:
                    self._check(a)
            else:
                raise ConfigError(f"unsupported call {name}() in potential")
        else:
            raise ConfigError(f"unsupported syntax {type(node).__name__} in potential")

    def _eval(self, node, x):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return x if node.id == "x" else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, x), self._eval(node.right, x))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, x))
        args = [self._eval(a, x) for a in node.args]
        if node.func.id == "poly":
            return _poly(x, args)
        return _FUNCS[node.func.id](args[0])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x) + self._eval(self._tree, x)

    @property
    def is_zero(self) -> bool:
        return isinstance(self._tree, ast.Constant) and self._tree.value == 0

    def __repr__(self):
        return f"Potential({self.text!r})"
