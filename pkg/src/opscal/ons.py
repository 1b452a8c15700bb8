"""Online Newton Step for log-loss over sigmoid-linear models (d = 2 or 3).

The recursion, per step: accumulate A <- A + grad grad^T, take the damped
Newton step theta~ <- theta - (1/gamma) A^{-1} grad, then project onto the
Euclidean ball of the configured radius under the A-norm,
argmin_{||theta|| <= radius} (theta~ - theta)^T A (theta~ - theta).
The forecast at step t always uses the PRE-update parameters; the pair
(feature_t, y_t) then produces theta_{t+1}.

OnsState is a value: steps return fresh states, so distinct streams can run
in parallel with independent states. The heavy lifting is shared with the
whole-stream kernel in ``opscal.kernels`` so step-by-step and batched
execution replay identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ForecastTrace, log_loss, sigmoid


@dataclass(frozen=True)
class OnsConfig:
    """Hyperparameters; fixed per family, never tuned per dataset."""

    dim: int
    gamma: float = 0.1
    rho: float = 100.0
    radius: float = 100.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 (Platt) or 3 (beta)")
        if min(self.gamma, self.rho, self.radius) <= 0:
            raise ValueError("gamma, rho, radius must be positive")

    @classmethod
    def platt(cls) -> "OnsConfig":
        return cls(dim=2, gamma=0.1, rho=100.0, radius=100.0)

    @classmethod
    def beta(cls) -> "OnsConfig":
        return cls(dim=3, gamma=0.1, rho=25.0, radius=100.0)


def initial_theta(dim: int) -> np.ndarray:
    """(1, 0) for the 2-d Platt family, (1, 1, 0) for the 3-d beta family."""
    if dim == 2:
        return np.array([1.0, 0.0])
    if dim == 3:
        return np.array([1.0, 1.0, 0.0])
    raise ValueError("dim must be 2 or 3")


@dataclass
class OnsState:
    """Parameters theta, curvature A = rho I + sum grad grad^T, and its
    inverse maintained by Sherman-Morrison (a cache, never authoritative)."""

    theta: np.ndarray
    A: np.ndarray
    A_inv: np.ndarray
    t: int = 0

    @classmethod
    def init(cls, config: OnsConfig, theta0: np.ndarray | None = None) -> "OnsState":
        d = config.dim
        theta = initial_theta(d) if theta0 is None else np.asarray(theta0, dtype=float).copy()
        if theta.shape != (d,):
            raise ValueError("theta0 has wrong dimension")
        return cls(
            theta=theta,
            A=config.rho * np.eye(d),
            A_inv=np.eye(d) / config.rho,
            t=0,
        )


def logloss_gradient(theta, feature, y) -> np.ndarray:
    """Gradient in theta of log_loss(sigmoid(theta . feature), y).

    Equals (sigmoid(theta . feature) - y) * feature.
    """
    theta = np.asarray(theta, dtype=float)
    feature = np.asarray(feature, dtype=float)
    if theta.shape != feature.shape:
        raise ValueError("theta and feature dimensions differ")
    p = sigmoid(float(theta @ feature))
    return (p - float(y)) * feature


def ons_step(state: OnsState, feature, y, config: OnsConfig) -> OnsState:
    """One online Newton update; returns the successor state.

    The caller makes its forecast from ``state.theta`` before invoking this.
    """
    feature = np.asarray(feature, dtype=float)
    if feature.shape != (config.dim,):
        raise ValueError("feature dimension mismatch")
    theta = state.theta.copy()
    A = state.A.copy()
    A_inv = state.A_inv.copy()
    kernels.ons_step_arrays(theta, A, A_inv, feature, float(y), config.gamma, config.radius)
    return OnsState(theta=theta, A=A, A_inv=A_inv, t=state.t + 1)


def project_ellipsoid(A, theta_tilde, radius: float) -> np.ndarray:
    """Project theta_tilde onto the Euclidean radius-ball under the A-norm.

    Returns theta_tilde unchanged when it is already feasible. A must be
    symmetric positive definite; solved exactly via eigendecomposition and
    bisection on the KKT multiplier (to ||theta(lam)|| within 1e-10).
    """
    A = np.asarray(A, dtype=float)
    theta_tilde = np.asarray(theta_tilde, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != theta_tilde.shape[0]:
        raise ValueError("A must be square and match theta_tilde")
    if not np.allclose(A, A.T, atol=1e-8):
        raise ValueError("A must be symmetric")
    if np.linalg.eigvalsh(A)[0] <= 0:
        raise ValueError("A must be positive definite")
    return kernels.project_anorm(np.ascontiguousarray(A), np.ascontiguousarray(theta_tilde), float(radius))


@dataclass
class RegretReport:
    method_loss: float
    oracle_loss: float
    regret: float
    oracle_params: np.ndarray


def regret(trace: ForecastTrace, oracle_params, method: str | None = None) -> RegretReport:
    """Cumulative log-loss of a method column minus the loss of the fixed
    comparator ``oracle_params`` applied to the base scores.

    The comparator family is inferred from the parameter length
    (2 -> Platt, 3 -> beta); ``method`` defaults to the only column.
    """
    from .scalers import beta_apply, platt_apply  # local import to avoid cycle

    if len(trace) == 0:
        raise ValueError("empty trace")
    if trace.score is None:
        raise ValueError("trace has no base scores")
    if method is None:
        if len(trace.forecasts) != 1:
            raise ValueError("method must be named when the trace has several columns")
        method = next(iter(trace.forecasts))
    params = np.asarray(oracle_params, dtype=float)
    if params.shape == (2,):
        oracle_fc = platt_apply(params, trace.score)
    elif params.shape == (3,):
        oracle_fc = beta_apply(params, trace.score)
    else:
        raise ValueError("oracle_params must have length 2 or 3")
    method_loss = float(np.sum(log_loss(trace.forecasts[method], trace.y)))
    oracle_loss = float(np.sum(log_loss(oracle_fc, trace.y)))
    return RegretReport(
        method_loss=method_loss,
        oracle_loss=oracle_loss,
        regret=method_loss - oracle_loss,
        oracle_params=params,
    )


def ons_regret_bound(T: int, B: float) -> float:
    """Worst-case regret guarantee 2 (e^B + 10 B) log T + 1 for the online
    Newton scaler against the radius-B comparator ball (B >= 1, T >= 10)."""
    return 2.0 * (np.exp(B) + 10.0 * B) * np.log(T) + 1.0
