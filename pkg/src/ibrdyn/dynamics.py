"""Switch rates and mean-field velocities for imitation protocols.

Four protocols are covered: imitate the better realization (IBR), pairwise
proportional imitation on realized payoffs (PPI_R) and on average payoffs
(PPI_A), and the replicator dynamics which both PPI variants generate.

All payoff comparisons are exact and strict.  Tied payoffs produce no flow in
either direction, and a near-tie in user data flips an indicator
discontinuously, so perturbing a payoff by 1e-15 can change the field.
"""
from __future__ import annotations

import enum
from collections.abc import Callable

import numpy as np

from .game import average_payoffs


class FieldKind(str, enum.Enum):
    IBR = "ibr"
    REPLICATOR = "replicator"

    @classmethod
    def parse(cls, value) -> FieldKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown field kind {value!r}; use 'ibr' or 'replicator'") from None


def _check_pair(i: int, j: int) -> None:
    if i == j:
        raise ValueError("switch rates are defined only for i != j")


def ibr_switch_rate(x, A, i: int, j: int) -> float:
    """Rate at which an ``i``-player imitates ``j`` under IBR.

    Equals ``x_j`` times the probability that a payoff drawn from row ``j``
    beats one drawn from row ``i`` when opponents are drawn from ``x``.
    """
    _check_pair(i, j)
    a = np.asarray(A, dtype=float)
    v = np.asarray(x, dtype=float)
    beats = (a[j][:, None] > a[i][None, :]).astype(float)  # [k, m]
    return float(v[j] * (v @ beats @ v))


def ppi_realized_switch_rate(x, A, i: int, j: int) -> float:
    _check_pair(i, j)
    a = np.asarray(A, dtype=float)
    v = np.asarray(x, dtype=float)
    gain = np.maximum(a[j][:, None] - a[i][None, :], 0.0)
    return float(v[j] * (v @ gain @ v))


def ppi_average_switch_rate(x, A, i: int, j: int) -> float:
    _check_pair(i, j)
    pi, _ = average_payoffs(x, A)
    return float(np.asarray(x, dtype=float)[j] * max(0.0, pi[j] - pi[i]))


def mean_field_from_rates(x, rate: Callable[[int, int], float]) -> np.ndarray:
    """Inflow minus outflow: ``dx_i = sum_j x_j r(j, i) - x_i sum_j r(i, j)``.

    ``rate(i, j)`` is queried only for ``i != j``; diagonal terms cancel.
    """
    v = np.asarray(x, dtype=float)
    n = v.size
    rho = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                rho[i, j] = rate(i, j)
    return v @ rho - v * rho.sum(axis=1)


def sign_tensor(A) -> np.ndarray:
    """``T[i, j, k, m] = sign(pi_im - pi_jk)``: net indicator in the IBR sum."""
    a = np.asarray(A, dtype=float)
    return np.sign(a[:, None, None, :] - a[None, :, :, None])


class IBRField:
    """IBR velocity for a fixed game, with the indicator tensor built once.

    Evaluates ``dx_i = x_i * sum_{j,k,m} x_j x_k x_m T[i,j,k,m]`` directly;
    no closed form is substituted.
    """

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        self.n = self.A.shape[0]
        self.T = sign_tensor(self.A)
        self._flat = self.T.reshape(self.n, -1)

    def growth(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        cube = np.multiply.outer(np.multiply.outer(v, v), v).ravel()
        return self._flat @ cube

    def __call__(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        return v * self.growth(v)

    def jacobian(self, x) -> np.ndarray:
        """Derivative of the velocity with respect to all ``n`` shares."""
        v = np.asarray(x, dtype=float)
        T = self.T
        dg = (
            np.einsum("ipkm,k,m->ip", T, v, v)
            + np.einsum("ijpm,j,m->ip", T, v, v)
            + np.einsum("ijkp,j,k->ip", T, v, v)
        )
        return np.diag(self.growth(v)) + v[:, None] * dg


class ReplicatorField:
    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        self.n = self.A.shape[0]

    def growth(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        pi = self.A @ v
        return pi - v @ pi

    def __call__(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        return v * self.growth(v)

    def jacobian(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        pi = self.A @ v
        dbar = pi + self.A.T @ v
        return np.diag(pi - v @ pi) + v[:, None] * (self.A - dbar[None, :])


def field_function(A, kind=FieldKind.IBR) -> IBRField | ReplicatorField:
    kind = FieldKind.parse(kind)
    return IBRField(A) if kind is FieldKind.IBR else ReplicatorField(A)


def ibr_field(x, A) -> np.ndarray:
    return IBRField(A)(x)


def replicator_field(x, A) -> np.ndarray:
    pi, pibar = average_payoffs(x, A)
    return np.asarray(x, dtype=float) * (pi - pibar)


def velocity(x, A, kind=FieldKind.IBR) -> np.ndarray:
    return field_function(A, kind)(x)


INTERPOLATION_NODES = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
_CHECK_NODES = np.linspace(0.025, 0.975, 20)


def two_strategy_polynomial(A, kind=FieldKind.IBR) -> np.ndarray:
    """Coefficients (ascending powers) of ``dx/dt`` as a polynomial in the share
    ``x`` of strategy 1 in a 2x2 game.

    The field is a quartic, so interpolation at five nodes recovers it
    exactly; the result is re-checked at twenty other nodes.
    """
    a = np.asarray(A, dtype=float)
    if a.shape != (2, 2):
        raise ValueError(f"two_strategy_polynomial needs a 2x2 game, got {a.shape}")
    f = field_function(a, kind)

    def rate(s):
        return f(np.array([s, 1.0 - s]))[0]

    V = np.vander(INTERPOLATION_NODES, 5, increasing=True)
    coeffs = np.linalg.solve(V, [rate(s) for s in INTERPOLATION_NODES])
    check = np.polynomial.polynomial.polyval(_CHECK_NODES, coeffs)
    resid = max(abs(c - rate(s)) for c, s in zip(check, _CHECK_NODES))
    if resid > 1e-10:
        raise RuntimeError(f"interpolated polynomial misses the field by {resid:.3g}")
    return coeffs
