"""Discrete three-morphogen reaction-diffusion dynamics on a ring of cells.

Each cell holds a passive, an activator and an inhibitor quantity and talks
only to its two ring neighbours.  The second difference is divided by
``2 * cell_length`` (not ``cell_length**2``); this scaling is kept on purpose
because the published parameter ranges are expressed against it.

Two integrators share the same arithmetic:

* :func:`step` is the plain numpy reference, one explicit Euler step.
* :func:`advance` runs many steps in a compiled loop and is bitwise
  identical to repeated :func:`step` calls.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numba
import numpy as np

GENERATOR_NAME = "numpy.random.Generator(PCG64)"
DEFAULT_N_CELLS = 36
DEFAULT_DIVERGENCE_BOUND = 1e6
# fraction of the explicit Euler stability limit used when dt is not given
DT_SAFETY = 0.5
# bound on the activator's linear decay rate, |1 - 3 q^2| for |q| <= 1
_ACT_REACTION_RATE = 2.0


class ConfigurationError(ValueError):
    """Invalid ring, parameter or state configuration."""


class DynamicsDiverged(RuntimeError):
    """The morphogen state blew up (non-finite or above the divergence bound)."""

    def __init__(self, step_index: int, message: str | None = None):
        self.step_index = int(step_index)
        super().__init__(message or f"dynamics diverged at step {self.step_index}")


@dataclass(frozen=True)
class ReactionParams:
    """Reaction rates and diffusion coefficients.

    ``gamma_inh`` is always derived as ``lam * gamma_act`` so the diffusion
    ratio can never drift out of sync with the two coefficients.
    ``reactions=False`` switches every reaction term off (diffusion only).
    """

    alpha: float = 0.001
    beta: float = 225.0
    gamma_pas: float = 50.0
    gamma_act: float = 1.0
    lam: float = 50.0
    reactions: bool = True

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma_pas", "gamma_act", "lam"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value!r}")
        if self.lam > 0 and self.gamma_act == 0:
            raise ConfigurationError("gamma_act must be > 0 when lam is used")

    @property
    def gamma_inh(self) -> float:
        return self.lam * self.gamma_act

    def with_(self, **changes) -> "ReactionParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma_pas": self.gamma_pas,
            "gamma_act": self.gamma_act,
            "lam": self.lam,
            "reactions": self.reactions,
        }


def stability_limit(params: ReactionParams, cell_length: float = 1.0) -> float:
    """Largest explicit Euler step for which every linear mode stays bounded.

    The ring Laplacian's most negative eigenvalue is ``-2 gamma / s``; the
    inhibitor adds its decay ``beta`` and the activator at most 2.  Without
    reactions this reduces to ``cell_length / max(gamma)``.
    """
    act_rate, inh_rate = (_ACT_REACTION_RATE, params.beta) if params.reactions else (0.0, 0.0)
    rates = (
        2.0 * params.gamma_pas / cell_length,
        2.0 * params.gamma_act / cell_length + act_rate,
        2.0 * params.gamma_inh / cell_length + inh_rate,
    )
    fastest = max(rates)
    if fastest == 0:
        return math.inf
    return 2.0 / fastest


def default_dt(params: ReactionParams, cell_length: float = 1.0) -> float:
    return DT_SAFETY * stability_limit(params, cell_length)


@dataclass(frozen=True)
class RingSpec:
    """Ring size and discretisation.

    ``dt=None`` means "pick a stable step from the reaction parameters";
    see :meth:`resolve_dt`.
    """

    n_cells: int = DEFAULT_N_CELLS
    cell_length: float = 1.0
    dt: float | None = None

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ConfigurationError(f"n_cells must be an integer >= 8, got {self.n_cells!r}")
        if not self.cell_length > 0:
            raise ConfigurationError(f"cell_length must be > 0, got {self.cell_length!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt!r}")

    def resolve_dt(self, params: ReactionParams) -> float:
        if self.dt is not None:
            return float(self.dt)
        return default_dt(params, self.cell_length)

    def to_dict(self) -> dict:
        return {"n_cells": self.n_cells, "cell_length": self.cell_length, "dt": self.dt}


@dataclass
class MorphogenState:
    q_pas: np.ndarray
    q_act: np.ndarray
    q_inh: np.ndarray
    t: float = 0.0
    step_index: int = field(default=0)

    def __post_init__(self):
        self.q_pas = np.asarray(self.q_pas, dtype=np.float64)
        self.q_act = np.asarray(self.q_act, dtype=np.float64)
        self.q_inh = np.asarray(self.q_inh, dtype=np.float64)
        shapes = {self.q_pas.shape, self.q_act.shape, self.q_inh.shape}
        if len(shapes) != 1 or self.q_pas.ndim != 1:
            raise ConfigurationError(f"morphogen arrays must be 1-D with equal length, got {shapes}")

    @property
    def n_cells(self) -> int:
        return self.q_pas.size

    def copy(self) -> "MorphogenState":
        return MorphogenState(
            self.q_pas.copy(), self.q_act.copy(), self.q_inh.copy(), self.t, self.step_index
        )

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.q_pas).all()
            and np.isfinite(self.q_act).all()
            and np.isfinite(self.q_inh).all()
        )

    def max_abs(self) -> float:
        return float(max(np.abs(self.q_pas).max(), np.abs(self.q_act).max(), np.abs(self.q_inh).max()))


def ring_laplacian(values, cell_length: float = 1.0, n_cells: int | None = None) -> np.ndarray:
    """Periodic second difference ``(v[m-1] - 2 v[m] + v[m+1]) / (2 s)``."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 3:
        raise ConfigurationError(f"ring_laplacian needs a 1-D array of length >= 3, got shape {v.shape}")
    if n_cells is not None and v.size != n_cells:
        raise ConfigurationError(f"expected {n_cells} values, got {v.size}")
    if not cell_length > 0:
        raise ConfigurationError(f"cell_length must be > 0, got {cell_length!r}")
    return (np.roll(v, 1) - 2.0 * v + np.roll(v, -1)) / (2.0 * cell_length)


def reaction_terms(state: MorphogenState, params: ReactionParams):
    """Reaction-only time derivatives ``(d_pas, d_act, d_inh)``."""
    qa, qh = state.q_act, state.q_inh
    d_pas = np.zeros_like(state.q_pas)
    if not params.reactions:
        return d_pas, np.zeros_like(qa), np.zeros_like(qh)
    d_act = qa - qa * qa * qa - qh + params.alpha
    d_inh = params.beta * (qa - qh)
    return d_pas, d_act, d_inh


def time_derivatives(state: MorphogenState, params: ReactionParams, cell_length: float = 1.0):
    """Full right-hand side: diffusion plus reaction for each morphogen."""
    r_pas, r_act, r_inh = reaction_terms(state, params)
    d_pas = params.gamma_pas * ring_laplacian(state.q_pas, cell_length)
    d_act = params.gamma_act * ring_laplacian(state.q_act, cell_length)
    d_inh = params.gamma_inh * ring_laplacian(state.q_inh, cell_length)
    # passive morphogen has no reaction term; adding r_pas would be a no-op
    del r_pas
    if params.reactions:
        d_act = d_act + r_act
        d_inh = d_inh + r_inh
    return d_pas, d_act, d_inh


def check_stability(dt: float, params: ReactionParams, cell_length: float) -> bool:
    limit = stability_limit(params, cell_length)
    if dt > limit:
        warnings.warn(
            f"dt={dt:g} exceeds the explicit stability limit {limit:g}; "
            "the run may diverge",
            RuntimeWarning,
            stacklevel=3,
        )
        return False
    return True


def step(
    state: MorphogenState,
    params: ReactionParams,
    spec: RingSpec,
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
) -> MorphogenState:
    """One explicit Euler step; returns a new state and leaves ``state`` alone."""
    if state.n_cells != spec.n_cells:
        raise ConfigurationError(f"state has {state.n_cells} cells, ring has {spec.n_cells}")
    dt = spec.resolve_dt(params)
    check_stability(dt, params, spec.cell_length)
    d_pas, d_act, d_inh = time_derivatives(state, params, spec.cell_length)
    new = MorphogenState(
        d_pas * dt + state.q_pas,
        d_act * dt + state.q_act,
        d_inh * dt + state.q_inh,
        t=state.t + dt,
        step_index=state.step_index + 1,
    )
    if not new.is_finite() or new.max_abs() > divergence_bound:
        raise DynamicsDiverged(new.step_index)
    return new


def init_state(
    spec: RingSpec,
    initial_angles=None,
    noise_sigma: float = 0.001,
    seed: int = 0,
) -> MorphogenState:
    """Passive morphogen holds the starting joint angles, activator is seeded
    Gaussian noise, inhibitor starts at zero."""
    n = spec.n_cells
    if initial_angles is None:
        initial_angles = np.full(n, 2.0 * np.pi / n)
    q_pas = np.array(initial_angles, dtype=np.float64)
    if q_pas.shape != (n,):
        raise ConfigurationError(f"initial_angles must have length {n}, got shape {q_pas.shape}")
    if noise_sigma < 0:
        raise ConfigurationError(f"noise_sigma must be >= 0, got {noise_sigma!r}")
    rng = np.random.default_rng(seed)
    q_act = rng.normal(0.0, noise_sigma, size=n) if noise_sigma > 0 else np.zeros(n)
    return MorphogenState(q_pas, q_act, np.zeros(n))


@numba.njit(nogil=True, cache=True)
def _euler_kernel(qp, qa, qh, g_pas, g_act, g_inh, beta, alpha, react, dt, s, n_steps, bound, rates):
    """Advance in place.  ``rates[k]`` receives max |dQ/dt| evaluated at the
    state before step k.  Returns the number of completed steps; fewer than
    ``n_steps`` means the step after the last completed one diverged."""
    n = qp.size
    op = np.empty(n)
    oa = np.empty(n)
    oh = np.empty(n)
    two_s = 2.0 * s
    for k in range(n_steps):
        op[:] = qp
        oa[:] = qa
        oh[:] = qh
        peak = 0.0
        ok = True
        for m in range(n):
            lo = m - 1 if m > 0 else n - 1
            hi = m + 1 if m < n - 1 else 0
            dp = g_pas * ((op[lo] - 2.0 * op[m] + op[hi]) / two_s)
            da = g_act * ((oa[lo] - 2.0 * oa[m] + oa[hi]) / two_s)
            dh = g_inh * ((oh[lo] - 2.0 * oh[m] + oh[hi]) / two_s)
            if react:
                da = da + (oa[m] - oa[m] * oa[m] * oa[m] - oh[m] + alpha)
                dh = dh + beta * (oa[m] - oh[m])
            qp[m] = dp * dt + op[m]
            qa[m] = da * dt + oa[m]
            qh[m] = dh * dt + oh[m]
            a = max(abs(dp), abs(da), abs(dh))
            if a > peak or a != a:
                peak = a
            for v in (qp[m], qa[m], qh[m]):
                if not (abs(v) <= bound):
                    ok = False
        rates[k] = peak
        if not ok:
            qp[:] = op
            qa[:] = oa
            qh[:] = oh
            return k
    return n_steps


def advance(
    state: MorphogenState,
    params: ReactionParams,
    spec: RingSpec,
    n_steps: int,
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
    rates: np.ndarray | None = None,
) -> MorphogenState:
    """Run ``n_steps`` Euler steps in compiled code.

    Bitwise identical to calling :func:`step` ``n_steps`` times.  If ``rates``
    is given (length >= n_steps) it is filled with the per-step max
    derivative magnitude.  On divergence the error carries the global step
    index and the last finite state as ``err.state``.
    """
    if state.n_cells != spec.n_cells:
        raise ConfigurationError(f"state has {state.n_cells} cells, ring has {spec.n_cells}")
    dt = spec.resolve_dt(params)
    check_stability(dt, params, spec.cell_length)
    if rates is None:
        rates = np.empty(n_steps)
    qp, qa, qh = state.q_pas.copy(), state.q_act.copy(), state.q_inh.copy()
    done = _euler_kernel(
        qp, qa, qh,
        float(params.gamma_pas), float(params.gamma_act), float(params.gamma_inh),
        float(params.beta), float(params.alpha), bool(params.reactions), float(dt), float(spec.cell_length),
        int(n_steps), float(divergence_bound), rates,
    )
    # time is accumulated step by step to match the reference integrator
    t = state.t
    for _ in range(done):
        t = t + dt
    out = MorphogenState(qp, qa, qh, t=t, step_index=state.step_index + done)
    if done < n_steps:
        err = DynamicsDiverged(out.step_index + 1)
        err.state = out
        raise err
    return out
