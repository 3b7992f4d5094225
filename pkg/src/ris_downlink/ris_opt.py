"""Closed-form reflection optimization, opportunistic user selection, and the
instantaneous sum rate.

For one user with direct channel h and reflection vector v = diag(f*) g, the
composite channel power as a function of the reflection vector gamma is the
quadratic |h|^2 + 2*Re{beta^H gamma} + |v^H gamma|^2 with beta = h*v. Under
the global passivity constraint ||gamma||^2 = Q its maximum is
(|h| + sqrt(Q)*||v||)^2, attained by gamma = sqrt(Q)*(h/|h|)*v/||v||.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ReflectionVector",
    "QuadraticObjective",
    "SchedulingOutcome",
    "optimal_reflection",
    "evaluate_objective",
    "evaluate_objective_batch",
    "composite_gain",
    "schedule",
    "sum_rate",
]

_NORM_RTOL = 1e-9


@dataclass(frozen=True)
class ReflectionVector:
    """Q complex reflection coefficients with ||gamma||^2 = Q (lossless RIS)."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=complex)
        object.__setattr__(self, "gamma", g)
        q = g.shape[0]
        nsq = float(np.vdot(g, g).real)
        if abs(nsq - q) > _NORM_RTOL * q:
            raise ValueError(f"passivity violated: ||gamma||^2 = {nsq:.12g}, expected {q}")


@dataclass(frozen=True)
class QuadraticObjective:
    """Per-user data of the reflection design problem: h and v = diag(f*) g."""

    h: complex
    v: np.ndarray

    @classmethod
    def for_user(cls, realization, k):
        v = np.conj(realization.f[k]) * realization.g
        return cls(h=complex(realization.h[k]), v=v)


@dataclass(frozen=True)
class SchedulingOutcome:
    """Best user (0-based index), its optimal composite channel power, and the
    reflection vector that attains it."""

    k_max: int
    alpha_opt: float
    gamma_opt: ReflectionVector


def optimal_reflection(obj: QuadraticObjective, Q: int) -> ReflectionVector:
    """Norm-constrained maximizer sqrt(Q) * (h/|h|) * v/||v||.

    Degenerate conventions keep runs reproducible: h = 0 uses phase factor 1;
    v = 0 (no reflected path, any direction optimal) returns sqrt(Q)*e_1.
    """
    v = np.asarray(obj.v, dtype=complex)
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        gamma = np.zeros(Q, dtype=complex)
        gamma[0] = math.sqrt(Q)
        return ReflectionVector(gamma)
    h = complex(obj.h)
    phase = h / abs(h) if h != 0 else 1.0
    return ReflectionVector(math.sqrt(Q) * phase * v / vnorm)


def evaluate_objective(obj: QuadraticObjective, gamma: ReflectionVector) -> float:
    """Composite channel power |h|^2 + 2*Re{beta^H gamma} + |v^H gamma|^2.

    The rank-one quadratic term is evaluated through v (never materializing
    the Q x Q matrix v v^H). Equals |h + v^H gamma|^2.
    """
    v = np.asarray(obj.v, dtype=complex)
    g = gamma.gamma
    if g.shape != v.shape:
        raise ValueError("gamma and v dimensions differ")
    vh_gamma = complex(np.vdot(v, g))
    h = complex(obj.h)
    return abs(h) ** 2 + 2.0 * (np.conj(h) * vh_gamma).real + abs(vh_gamma) ** 2


def evaluate_objective_batch(obj: QuadraticObjective, gammas: np.ndarray) -> np.ndarray:
    """Objective for many candidate reflection vectors (rows of `gammas`)."""
    v = np.asarray(obj.v, dtype=complex)
    vh = gammas @ np.conj(v)
    h = complex(obj.h)
    return np.abs(h) ** 2 + 2.0 * (np.conj(h) * vh).real + np.abs(vh) ** 2


def composite_gain(obj: QuadraticObjective, gamma: ReflectionVector) -> complex:
    """Overall scalar channel h + v^H gamma seen by the user."""
    return complex(obj.h) + complex(np.vdot(np.asarray(obj.v), gamma.gamma))


def schedule(realization) -> SchedulingOutcome:
    """Pick the user maximizing (|h_k| + sqrt(Q)*||diag(f_k*) g||)^2.

    Ties (probability zero under continuous fading) break to the lowest
    index for determinism.
    """
    h = realization.h
    f = realization.f
    g = realization.g
    q = g.shape[0]
    vnorms = np.linalg.norm(np.conj(f) * g[np.newaxis, :], axis=1)
    alphas = (np.abs(h) + math.sqrt(q) * vnorms) ** 2
    k_best = int(np.argmax(alphas))  # argmax returns the first (lowest) maximizer
    gamma = optimal_reflection(QuadraticObjective.for_user(realization, k_best), q)
    return SchedulingOutcome(k_max=k_best, alpha_opt=float(alphas[k_best]), gamma_opt=gamma)


def schedule_alpha(realization) -> float:
    """Just the scheduled composite channel power (hot path of the trial loop)."""
    h = realization.h
    f = realization.f
    g = realization.g
    q = g.shape[0]
    vnorms = np.linalg.norm(np.conj(f) * g[np.newaxis, :], axis=1)
    return float(np.max((np.abs(h) + math.sqrt(q) * vnorms) ** 2))


def sum_rate(p_tx: float, alpha: float) -> float:
    """Instantaneous sum-rate capacity log2(1 + p_tx * alpha), bits/s/Hz."""
    if p_tx <= 0.0:
        raise ValueError("p_tx must be positive")
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    return math.log2(1.0 + p_tx * alpha)
