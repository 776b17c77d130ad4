"""Observables derived from simulation output."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .geometry import ProjectionFailed, project_to_closure, reconstruct_polygon

# lobes whose prominence is below this fraction of the amplitude are ripple
PROMINENCE_FRACTION = 0.05
# below this amplitude the activator is treated as flat (zero lobes)
MIN_LOBE_AMPLITUDE = 1e-3


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class SteadyStateCriterion:
    deriv_tol: float = 1e-6
    hold_steps: int = 1000
    max_steps: int = 200_000

    def __post_init__(self):
        if not self.deriv_tol > 0:
            raise AnalysisError(f"deriv_tol must be > 0, got {self.deriv_tol!r}")
        if int(self.hold_steps) != self.hold_steps or self.hold_steps < 1:
            raise AnalysisError(f"hold_steps must be an integer >= 1, got {self.hold_steps!r}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise AnalysisError(f"max_steps must be an integer >= 1, got {self.max_steps!r}")

    def to_dict(self) -> dict:
        return {"deriv_tol": self.deriv_tol, "hold_steps": self.hold_steps, "max_steps": self.max_steps}


class SteadyStateDetector:
    """Streaming version of :func:`detect_steady_state`.

    Feed per-step max |dQ/dt| values in chunks; ``found`` holds the step at
    which the qualifying quiet run started, once one has been seen.
    """

    def __init__(self, criterion: SteadyStateCriterion, start: int = 0):
        self.criterion = criterion
        self.position = start
        self.run_start: int | None = None
        self.found: int | None = None

    def feed(self, rates) -> int | None:
        if self.found is not None:
            return self.found
        rates = np.asarray(rates, dtype=np.float64)
        quiet = rates < self.criterion.deriv_tol
        hold = self.criterion.hold_steps
        for k, q in enumerate(quiet):
            idx = self.position + k
            if q:
                if self.run_start is None:
                    self.run_start = idx
                if idx - self.run_start + 1 >= hold:
                    self.found = self.run_start
                    break
            else:
                self.run_start = None
        self.position += len(quiet)
        return self.found


def detect_steady_state(rates, criterion: SteadyStateCriterion) -> int | None:
    """First step from which max |dQ/dt| stays below ``deriv_tol`` for
    ``hold_steps`` consecutive steps, or ``None`` if that never happens
    within ``max_steps``.

    ``rates[k]`` is the largest derivative magnitude (over cells and
    morphogens) of the state at step k; see :func:`rates_from_states`.
    """
    rates = np.asarray(rates, dtype=np.float64)
    if rates.size == 0:
        raise AnalysisError("empty trajectory")
    det = SteadyStateDetector(criterion)
    det.feed(rates[: criterion.max_steps])
    return det.found


def rates_from_states(states, dt: float) -> np.ndarray:
    """Per-step max |dQ/dt| from a stored trajectory, by forward differences.

    For explicit Euler output this recovers the derivative used at each step
    (up to round-off).  ``states`` may be MorphogenState objects or arrays.
    """
    stacked = []
    for s in states:
        if hasattr(s, "q_pas"):
            stacked.append(np.concatenate((s.q_pas, s.q_act, s.q_inh)))
        else:
            stacked.append(np.atleast_1d(np.asarray(s, dtype=np.float64)))
    arr = np.asarray(stacked)
    if len(arr) < 2:
        raise AnalysisError("need at least two states to estimate derivatives")
    return np.abs(np.diff(arr, axis=0)).max(axis=1) / dt


def amplitude(q_act) -> float:
    q = np.asarray(q_act, dtype=np.float64)
    if q.size == 0:
        raise AnalysisError("amplitude of an empty array")
    return float((q.max() - q.min()) / 2.0)


def count_lobes(q_act) -> int:
    """Number of circular local maxima that stand out from the ripple.

    The ring is cut at its global minimum and closed with a copy of that
    minimum, which turns circular peak finding into the ordinary linear
    kind without losing or duplicating peaks.
    """
    q = np.asarray(q_act, dtype=np.float64)
    if q.ndim != 1 or q.size < 3:
        raise AnalysisError(f"count_lobes needs a 1-D array of length >= 3, got shape {q.shape}")
    amp = amplitude(q)
    if amp < MIN_LOBE_AMPLITUDE:
        return 0
    k = int(np.argmin(q))
    ring = np.concatenate((q[k:], q[:k], q[k : k + 1]))
    peaks, _ = find_peaks(ring, prominence=PROMINENCE_FRACTION * amp)
    return int(peaks.size)


def dominant_wavenumber(q_act) -> int:
    """Circular harmonic with the most energy (excluding the mean)."""
    q = np.asarray(q_act, dtype=np.float64)
    spectrum = np.abs(np.fft.rfft(q - q.mean()))
    if spectrum.size < 2:
        return 0
    return int(np.argmax(spectrum[1:]) + 1)


def turning_function(angles) -> np.ndarray:
    """Values of the step turning function on the N equal arc-length cells.

    Value k is the cumulative heading after turning at joints 0..k.
    """
    return np.cumsum(np.asarray(angles, dtype=np.float64))


def _relabelled_turning_functions(angles) -> np.ndarray:
    """Row c is the turning function of the ring relabelled to start at cell c."""
    theta = np.asarray(angles, dtype=np.float64)
    n = theta.size
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return np.cumsum(theta[idx], axis=1)


def turning_distance(a, b) -> float:
    """L2 distance between turning functions, minimised over cyclic
    relabelling of ``b`` and a constant rotation.

    Arc length is normalised to [0, 1) and every cell has the same length,
    so for each relabelling the best rotation is the mean difference and the
    remaining distance is the standard deviation of the difference.
    """
    ta = turning_function(a)
    b = np.asarray(b, dtype=np.float64)
    if ta.shape != b.shape:
        raise AnalysisError(f"turning_distance needs equal cell counts, got {ta.shape} and {b.shape}")
    diff = _relabelled_turning_functions(b) - ta[None, :]
    diff -= diff.mean(axis=1, keepdims=True)
    per_shift = np.sqrt(np.mean(diff * diff, axis=1))
    return float(per_shift.min())


@dataclass
class ShapeSummary:
    lobe_count: int
    amplitude: float
    valid: bool
    angles: np.ndarray
    projected: np.ndarray | None = None
    self_intersects: bool = False
    projection_error: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lobe_count": self.lobe_count,
            "amplitude": self.amplitude,
            "valid": self.valid,
            "self_intersects": self.self_intersects,
            "projection_error": self.projection_error,
            "angles": [float(v) for v in self.angles],
            "projected": None if self.projected is None else [float(v) for v in self.projected],
            **self.extra,
        }


def summarize_shape(q_act, angles, cell_length: float = 1.0, tol: float = 1e-9, max_iter: int = 100) -> ShapeSummary:
    """Lobes, amplitude and physical validity of one snapshot.

    Validity means the commanded angles can be projected onto a closed ring
    and the projected ring does not cross itself.
    """
    angles = np.asarray(angles, dtype=np.float64).copy()
    try:
        projected = project_to_closure(angles, cell_length, tol=tol, max_iter=max_iter)
    except ProjectionFailed as exc:
        return ShapeSummary(
            lobe_count=count_lobes(q_act),
            amplitude=amplitude(q_act),
            valid=False,
            angles=angles,
            projection_error=str(exc),
        )
    crossing = reconstruct_polygon(projected, cell_length).self_intersects
    return ShapeSummary(
        lobe_count=count_lobes(q_act),
        amplitude=amplitude(q_act),
        valid=not crossing,
        angles=angles,
        projected=projected,
        self_intersects=crossing,
    )
