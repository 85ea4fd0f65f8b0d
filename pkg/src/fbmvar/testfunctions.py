"""Weight functions with hand-coded derivatives up to order three.

Every member is C^3 with derivatives of at most polynomial growth, so all
moments of f^{(i)}(B_t) are bounded uniformly in t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

Fn = Callable[[np.ndarray], np.ndarray]


def _const(c):
    return lambda x: np.full_like(np.asarray(x, dtype=float), c)


@dataclass(frozen=True)
class TestFunction:
    name: str
    eval: Fn
    d1: Fn
    d2: Fn
    d3: Fn
    moment_bound_note: str = ""

    __test__ = False  # not a pytest class

    def __call__(self, x):
        return self.eval(x)

    def derivative(self, order: int) -> Fn:
        return (self.eval, self.d1, self.d2, self.d3)[order]


def _gauss(x):
    return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2)


_CATALOG = [
    TestFunction("zero", _const(0.0), _const(0.0), _const(0.0), _const(0.0), "identically zero"),
    TestFunction("one", _const(1.0), _const(0.0), _const(0.0), _const(0.0), "constant"),
    TestFunction(
        "identity",
        lambda x: np.asarray(x, dtype=float) * 1.0,
        _const(1.0), _const(0.0), _const(0.0),
        "linear growth",
    ),
    TestFunction(
        "square",
        lambda x: np.asarray(x, dtype=float) ** 2,
        lambda x: 2.0 * np.asarray(x, dtype=float),
        _const(2.0), _const(0.0),
        "polynomial growth, f'' constant",
    ),
    TestFunction(
        "cube",
        lambda x: np.asarray(x, dtype=float) ** 3,
        lambda x: 3.0 * np.asarray(x, dtype=float) ** 2,
        lambda x: 6.0 * np.asarray(x, dtype=float),
        _const(6.0),
        "polynomial growth",
    ),
    TestFunction("sin", np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), "bounded"),
    TestFunction("cos", np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin, "bounded"),
    TestFunction(
        "gauss",
        _gauss,
        lambda x: -np.asarray(x, dtype=float) * _gauss(x),
        lambda x: (np.asarray(x, dtype=float) ** 2 - 1.0) * _gauss(x),
        lambda x: (3.0 * np.asarray(x, dtype=float) - np.asarray(x, dtype=float) ** 3) * _gauss(x),
        "bounded with bounded derivatives",
    ),
]

_ALIASES = {"x": "identity", "x2": "square", "x^2": "square", "x3": "cube", "x^3": "cube",
            "sine": "sin", "cosine": "cos", "gaussian": "gauss", "gaussian-bump": "gauss",
            "1": "one", "0": "zero"}


def catalog() -> list[TestFunction]:
    return list(_CATALOG)


def get(name: str) -> TestFunction:
    key = _ALIASES.get(name, name)
    for f in _CATALOG:
        if f.name == key:
            return f
    raise DomainError(f"unknown test function {name!r}; known: {[f.name for f in _CATALOG]}")


def derivative_of(f: TestFunction) -> TestFunction:
    """f' as a TestFunction (its third derivative is not available and raises)."""

    def missing(x):
        raise DomainError(f"fourth derivative of {f.name} is not catalogued")

    return TestFunction(f"d({f.name})", f.d1, f.d2, f.d3, missing, f.moment_bound_note)
