"""Named games from the literature on imitate-the-better-realization dynamics.

Presets are addressed by short labels (``table1-C2``, ``table5-A1``,
``example3-A4?alpha=2``, ``zeeman-Z``).  Parameterized families accept
query-style arguments after ``?``.
"""
from __future__ import annotations

from dataclasses import dataclass
from urllib.parse import parse_qsl

from numpy.polynomial import Polynomial

from .game import PayoffMatrix

TABLE1 = {
    "D1": [[4, 3], [2, 1]],
    "D2": [[4, 3], [1, 2]],
    "D3": [[4, 2], [3, 1]],
    "D4": [[3, 4], [2, 1]],
    "D5": [[3, 4], [1, 2]],
    "D6": [[2, 4], [1, 3]],
    "D7": [[3, 3], [2, 1]],
    "D8": [[3, 3], [1, 2]],
    "D9": [[3, 2], [2, 1]],
    "D10": [[2, 3], [1, 2]],
    "D11": [[3, 2], [1, 1]],
    "D12": [[2, 3], [1, 1]],
    "W1": [[3, 2], [3, 1]],
    "W2": [[2, 3], [1, 3]],
    "W3": [[3, 2], [1, 2]],
    "W4": [[2, 3], [2, 1]],
    "W5": [[3, 1], [2, 1]],
    "W6": [[1, 3], [1, 2]],
    "C1": [[4, 2], [1, 3]],
    "C2": [[4, 1], [3, 2]],
    "C3": [[4, 1], [2, 3]],
    "C4": [[3, 2], [1, 3]],
    "C5": [[3, 1], [2, 2]],
    "C6": [[3, 1], [1, 2]],
    "A1": [[2, 4], [3, 1]],
    "A2": [[1, 4], [3, 2]],
    "A3": [[1, 4], [2, 3]],
    "A4": [[2, 3], [3, 1]],
    "A5": [[1, 3], [2, 2]],
    "A6": [[1, 3], [2, 1]],
}

TABLE5 = {
    "A1": [[0, -3, 3], [2, 0, -2], [-1, 1, 0]],
    "A2": [[0, -2, 3], [2, 0, -1], [-3, 1, 0]],
    "A3": [[0, -1, 3], [2, 0, -3], [-2, 1, 0]],
    "B1": [[0, -3, 3], [1, 0, -1], [-2, 2, 0]],
    "B2": [[0, -1, 3], [1, 0, -2], [-3, 2, 0]],
    "B3": [[0, -2, 3], [1, 0, -3], [-1, 2, 0]],
    "C1": [[0, -1, 3], [2, 0, -2], [-3, 1, 0]],
    "C2": [[0, -3, 3], [2, 0, -1], [-2, 1, 0]],
    "C3": [[0, -2, 3], [2, 0, -3], [-1, 1, 0]],
}

EXAMPLE3 = {
    "A1": [[1, 1, 2], [1, 1, 1], [0, 0, 0]],
    "A2": [[3, 2, 0], [2, 1, 3], [1, 0, 2]],
}

ZEEMAN_Z = [[0, 6, -4], [-3, 0, 5], [-1, 3, 0]]
SELF_NEGATING_W = [[0, 4, 3], [1, 3, 5], [3, 2, 6]]


def example3_a3(alpha: float = 2.0) -> PayoffMatrix:
    _check_alpha(alpha)
    return PayoffMatrix([[4, 4, 1], [alpha, alpha, alpha], [1, 1, 4]])


def example3_a4(alpha: float = 2.0) -> PayoffMatrix:
    _check_alpha(alpha)
    return PayoffMatrix([[1, 1, 4], [alpha, alpha, alpha], [4, 4, 1]])


def _check_alpha(alpha: float) -> None:
    if not 1 < alpha < 4:
        raise ValueError(f"alpha must lie in (1, 4), got {alpha}")


def symmetric_rps(a: float = 1.0, b: float = 1.0) -> PayoffMatrix:
    """Rock-Paper-Scissors with loss ``a`` and win ``b`` (both positive)."""
    if a <= 0 or b <= 0:
        raise ValueError("symmetric RPS needs a, b > 0")
    return PayoffMatrix([[0, -a, b], [b, 0, -a], [-a, b, 0]])


# Closed forms printed for the two-strategy dynamics, x = share of strategy 1.
_x = Polynomial([0.0, 1.0])
_q = _x * (1 - _x)


@dataclass(frozen=True)
class ClosedForm:
    row_id: str
    labels: tuple[str, ...]
    expression: str
    polynomial: Polynomial
    interior_rest_point: str | None = None


CLOSED_FORMS: tuple[ClosedForm, ...] = (
    ClosedForm("table2-1", ("D1", "D2", "D4", "D5", "D7", "D8", "D11", "D12"),
               "x(1-x)", _q),
    ClosedForm("table2-2", ("D3", "D6"), "x(1-x)[x^2+(1-x)^2]", _q * (_x**2 + (1 - _x) ** 2)),
    ClosedForm("table2-3", ("D9",), "x(1-x)[x+(1-x)^2]", _q * (_x + (1 - _x) ** 2)),
    ClosedForm("table2-4", ("D10",), "x(1-x)[x^2+(1-x)]", _q * (_x**2 + (1 - _x))),
    ClosedForm("table2-5", ("W1", "W6"), "x(1-x)^3", _x * (1 - _x) ** 3),
    ClosedForm("table2-6", ("W2", "W5"), "x^3(1-x)", _x**3 * (1 - _x)),
    ClosedForm("table2-7", ("W3",), "x^2(1-x)(1+x)", _x**2 * (1 - _x) * (1 + _x)),
    ClosedForm("table2-8", ("W4",), "x(1-x)^2(1+x)", _x * (1 - _x) ** 2 * (1 + _x)),
    ClosedForm("table3-1", ("C1",), "x(1-x)[-2x^2+4x-1]", _q * (-2 * _x**2 + 4 * _x - 1),
               "1-sqrt(2)/2"),
    ClosedForm("table3-2", ("C2", "C3", "C5"), "x(1-x)[2x-1]", _q * (2 * _x - 1), "1/2"),
    ClosedForm("table3-3", ("C4", "C6"), "x(1-x)[-x^2+3x-1]", _q * (-(_x**2) + 3 * _x - 1),
               "(3-sqrt(5))/2"),
    ClosedForm("table4-1", ("A1",), "x(1-x)[1-2x^2]", _q * (1 - 2 * _x**2), "1/sqrt(2)"),
    ClosedForm("table4-2", ("A2", "A3", "A5"), "x(1-x)[1-2x]", _q * (1 - 2 * _x), "1/2"),
    ClosedForm("table4-3", ("A4", "A6"), "x(1-x)[-x^2-x+1]", _q * (-(_x**2) - _x + 1),
               "(sqrt(5)-1)/2"),
)

# The printed W3 row cannot hold for any 2x2 game (its bracket exceeds 1 near
# x = 1); the definitional sum gives this instead.
W3_CORRECTED = ClosedForm("table2-7", ("W3",), "x^2(1-x)(2-x)", _x**2 * (1 - _x) * (2 - _x))


def closed_form_for(label: str) -> ClosedForm:
    for cf in CLOSED_FORMS:
        if label in cf.labels:
            return cf
    raise KeyError(label)


def _fixed(entries):
    return lambda: PayoffMatrix(entries)


_REGISTRY = {}
for _k, _v in TABLE1.items():
    _REGISTRY[f"table1-{_k}"] = _fixed(_v)
for _k, _v in TABLE5.items():
    _REGISTRY[f"table5-{_k}"] = _fixed(_v)
for _k, _v in EXAMPLE3.items():
    _REGISTRY[f"example3-{_k}"] = _fixed(_v)
_REGISTRY.update({
    "example1": _fixed([[4, 1], [3, 2]]),
    "example2": _fixed([[10, 0], [3, 3]]),
    "example3-A3": example3_a3,
    "example3-A4": example3_a4,
    "example4-Z": _fixed(ZEEMAN_Z),
    "zeeman-Z": _fixed(ZEEMAN_Z),
    "example4-W": _fixed(SELF_NEGATING_W),
    "rps-standard": _fixed([[0, -1, 1], [1, 0, -1], [-1, 1, 0]]),
    "rps-symmetric": symmetric_rps,
})


def preset_names() -> list[str]:
    return sorted(_REGISTRY)


def get_preset(name: str) -> PayoffMatrix:
    """Look up a preset by label, e.g. ``"table5-C2"`` or ``"example3-A4?alpha=2.5"``."""
    base, _, query = name.partition("?")
    try:
        factory = _REGISTRY[base]
    except KeyError:
        raise KeyError(f"unknown preset {base!r}") from None
    params = {}
    for key, value in parse_qsl(query, strict_parsing=bool(query)):
        try:
            params[key] = float(value)
        except ValueError:
            raise ValueError(f"preset parameter {key}={value!r} is not a number") from None
    try:
        return factory(**params)
    except TypeError:
        raise ValueError(f"preset {base!r} does not accept parameters {sorted(params)}") from None
