"""Trial, sweep and parameter-trajectory drivers."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import (
    ShapeSummary,
    SteadyStateCriterion,
    SteadyStateDetector,
    summarize_shape,
    turning_distance,
)
from .core_rd import (
    DEFAULT_DIVERGENCE_BOUND,
    GENERATOR_NAME,
    ConfigurationError,
    DynamicsDiverged,
    MorphogenState,
    ReactionParams,
    RingSpec,
    advance,
    default_dt,
    init_state,
)
from .geometry import TWO_PI, angles_from_morphogens

PARAM_NAMES = ("alpha", "beta", "gamma_pas", "gamma_act", "lam")
DEFAULT_STRIDE = 100
DEFAULT_NOISE = 0.001


def shape_for_distance(summary: ShapeSummary) -> np.ndarray:
    """Angles used for shape comparison: the projected body when available,
    otherwise the command with its angle-sum excess spread evenly."""
    if summary.projected is not None:
        return summary.projected
    theta = summary.angles
    return theta - (theta.sum() - TWO_PI) / theta.size


@dataclass
class ExperimentRecord:
    metadata: dict
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    segment_of_sample: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    q_pas: list = field(default_factory=list)
    q_act: list = field(default_factory=list)
    q_inh: list = field(default_factory=list)
    summaries: list = field(default_factory=list)
    segments: list = field(default_factory=list)
    turning: list = field(default_factory=list)
    reference_sample: int | None = None
    shape_noise_floor: float | None = None
    diverged: dict | None = None
    final_summary: ShapeSummary | None = None

    def add_sample(self, state: MorphogenState, segment: int, summarize: bool, cell_length: float):
        theta = angles_from_morphogens(state)
        self.steps.append(state.step_index)
        self.times.append(state.t)
        self.segment_of_sample.append(segment)
        self.theta.append(theta.copy())
        self.q_pas.append(state.q_pas.copy())
        self.q_act.append(state.q_act.copy())
        self.q_inh.append(state.q_inh.copy())
        if summarize:
            self.summaries.append(summarize_shape(state.q_act, theta, cell_length))

    @property
    def n_samples(self) -> int:
        return len(self.steps)

    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta)

    def compute_turning(self):
        """Turning distance of every summarised sample from the reference shape."""
        if self.reference_sample is None or not self.summaries:
            self.turning = []
            return
        ref = shape_for_distance(self.summaries[self.reference_sample])
        self.turning = [turning_distance(ref, shape_for_distance(s)) for s in self.summaries]


def _run_segment(
    state: MorphogenState,
    params: ReactionParams,
    spec: RingSpec,
    criterion: SteadyStateCriterion,
    stride: int,
    record: ExperimentRecord | None,
    segment: int,
    max_steps: int,
    summarize: bool,
    divergence_bound: float,
):
    """Advance until steady or ``max_steps``; returns (state, steady_step, diverged_step)."""
    detector = SteadyStateDetector(criterion, start=state.step_index)
    rates = np.empty(stride)
    taken = 0
    steady = None
    while taken < max_steps:
        n = min(stride, max_steps - taken)
        try:
            state = advance(state, params, spec, n, divergence_bound, rates)
        except DynamicsDiverged as err:
            state = err.state
            if record is not None:
                record.add_sample(state, segment, False, spec.cell_length)
            return state, None, err.step_index
        taken += n
        steady = detector.feed(rates[:n])
        if record is not None:
            record.add_sample(state, segment, summarize, spec.cell_length)
        if steady is not None:
            break
    return state, steady, None


def _metadata(params, spec, seed, criterion, noise_sigma, dt, stride, extra=None) -> dict:
    meta = {
        "seed": int(seed),
        "params": params.to_dict(),
        "spec": spec.to_dict(),
        "dt": dt,
        "criterion": criterion.to_dict(),
        "noise_sigma": noise_sigma,
        "sample_stride": stride,
        "generator": GENERATOR_NAME,
        "code_version": __version__,
    }
    if extra:
        meta.update(extra)
    return meta


def run_trial(
    params: ReactionParams,
    spec: RingSpec,
    seed: int,
    criterion: SteadyStateCriterion | None = None,
    noise_sigma: float = DEFAULT_NOISE,
    initial_angles=None,
    stride: int = DEFAULT_STRIDE,
    record_samples: bool = True,
    summarize_samples: bool = False,
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
):
    """Initialise from noise, run to steady state, classify the final shape.

    Divergence never raises here: it is written into the record and the
    returned summary is marked invalid.
    """
    criterion = criterion or SteadyStateCriterion()
    if spec.dt is None:
        spec = RingSpec(spec.n_cells, spec.cell_length, default_dt(params, spec.cell_length))
    state = init_state(spec, initial_angles, noise_sigma, seed)
    record = ExperimentRecord(_metadata(params, spec, seed, criterion, noise_sigma, spec.dt, stride))
    rec = record if record_samples else None
    if rec is not None:
        rec.add_sample(state, 0, summarize_samples, spec.cell_length)
    state, steady, diverged = _run_segment(
        state, params, spec, criterion, stride, rec, 0, criterion.max_steps, summarize_samples, divergence_bound
    )
    seg = {
        "index": 0,
        "params": params.to_dict(),
        "start_step": 0,
        "steady_step": steady,
        "end_step": state.step_index,
    }
    if diverged is not None:
        record.diverged = {"segment": 0, "step": diverged}
        summary = ShapeSummary(
            lobe_count=0,
            amplitude=float("nan"),
            valid=False,
            angles=angles_from_morphogens(state),
            projection_error="dynamics diverged",
        )
    else:
        summary = summarize_shape(state.q_act, angles_from_morphogens(state), spec.cell_length)
    seg.update(lobe_count=summary.lobe_count, amplitude=summary.amplitude, valid=summary.valid)
    record.segments.append(seg)
    record.final_summary = summary
    if rec is not None and summarize_samples and rec.summaries:
        rec.summaries[-1] = summary
        rec.reference_sample = rec.n_samples - 1
        rec.compute_turning()
        if rec.n_samples >= 2 and diverged is None:
            rec.shape_noise_floor = turning_distance(
                shape_for_distance(rec.summaries[-2]), shape_for_distance(rec.summaries[-1])
            )
    return summary, record


# -- sweeps ----------------------------------------------------------------


def _check_axis(name, values):
    if name not in PARAM_NAMES:
        raise ConfigurationError(f"unknown sweep parameter {name!r}; expected one of {PARAM_NAMES}")
    vals = [float(v) for v in values]
    if not vals:
        raise ConfigurationError(f"axis {name!r} has an empty grid")
    d = np.diff(vals)
    if len(vals) > 1 and not ((d > 0).all() or (d < 0).all()):
        raise ConfigurationError(f"axis {name!r} grid must be strictly monotone")
    return name, vals


@dataclass
class SweepConfig:
    axis1: tuple
    axis2: tuple
    fixed: ReactionParams = field(default_factory=ReactionParams)
    trials: int = 10
    spec: RingSpec = field(default_factory=RingSpec)
    criterion: SteadyStateCriterion = field(default_factory=SteadyStateCriterion)
    base_seed: int = 0
    noise_sigma: float = DEFAULT_NOISE

    def __post_init__(self):
        self.axis1 = _check_axis(*self.axis1)
        self.axis2 = _check_axis(*self.axis2)
        if self.axis1[0] == self.axis2[0]:
            raise ConfigurationError("sweep axes must be different parameters")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigurationError(f"trials must be an integer >= 1, got {self.trials!r}")

    def grid(self):
        (n1, v1), (n2, v2) = self.axis1, self.axis2
        for i, a in enumerate(v1):
            for j, b in enumerate(v2):
                yield (i, j), self.fixed.with_(**{n1: a, n2: b})

    def seed_for(self, trial: int) -> int:
        return self.base_seed + trial


@dataclass
class SweepPoint:
    axis1_value: float
    axis2_value: float
    lobe_counts: list
    amplitudes: list
    valid: list
    diverged: list

    @property
    def trials(self) -> int:
        return len(self.lobe_counts)

    def _frac(self, pred) -> float:
        return sum(1 for k, ok in zip(self.lobe_counts, self.valid) if pred(k, ok)) / self.trials

    @property
    def frac_2lobe(self):
        return self._frac(lambda k, ok: ok and k == 2)

    @property
    def frac_3lobe(self):
        return self._frac(lambda k, ok: ok and k == 3)

    @property
    def frac_4plus(self):
        return self._frac(lambda k, ok: ok and k >= 4)

    @property
    def frac_invalid(self):
        return self._frac(lambda k, ok: not ok)

    @property
    def frac_other(self):
        return self._frac(lambda k, ok: ok and k < 2)

    def _finite_amplitudes(self):
        return [a for a in self.amplitudes if math.isfinite(a)]

    @property
    def mean_amplitude(self) -> float:
        amps = self._finite_amplitudes()
        return float(np.mean(amps)) if amps else float("nan")

    @property
    def median_amplitude(self) -> float:
        amps = self._finite_amplitudes()
        return float(np.median(amps)) if amps else float("nan")


@dataclass
class SweepResult:
    config: SweepConfig
    points: dict  # (i, j) -> SweepPoint

    def rows(self):
        (_, v1), (_, v2) = self.config.axis1, self.config.axis2
        for i in range(len(v1)):
            for j in range(len(v2)):
                yield self.points[(i, j)]


def _sweep_task(args):
    key, params, trial, config = args
    summary, _ = run_trial(
        params,
        config.spec,
        config.seed_for(trial),
        config.criterion,
        noise_sigma=config.noise_sigma,
        record_samples=False,
    )
    return key, trial, summary


def run_sweep(config: SweepConfig, threads: int = 1) -> SweepResult:
    """Run every (grid point, trial) pair; aggregation is keyed, so the
    result does not depend on thread count or completion order."""
    tasks = [(key, params, t, config) for key, params in config.grid() for t in range(config.trials)]
    if threads <= 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_task, tasks))
    by_key: dict = {}
    for key, trial, summary in results:
        by_key.setdefault(key, {})[trial] = summary
    points = {}
    (_, v1), (_, v2) = config.axis1, config.axis2
    for key, trials in by_key.items():
        ordered = [trials[t] for t in range(config.trials)]
        points[key] = SweepPoint(
            axis1_value=v1[key[0]],
            axis2_value=v2[key[1]],
            lobe_counts=[s.lobe_count for s in ordered],
            amplitudes=[s.amplitude for s in ordered],
            valid=[s.valid for s in ordered],
            diverged=[s.projection_error == "dynamics diverged" for s in ordered],
        )
    return SweepResult(config, points)


# -- parameter trajectories -------------------------------------------------


@dataclass
class TrajectorySegment:
    param: str
    value: float
    max_steps: int = 200_000

    def __post_init__(self):
        if self.param not in PARAM_NAMES:
            raise ConfigurationError(f"unknown schedule parameter {self.param!r}; expected one of {PARAM_NAMES}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ConfigurationError(f"segment max_steps must be a positive integer, got {self.max_steps!r}")
        self.value = float(self.value)


@dataclass
class TrajectorySchedule:
    segments: list
    reverse: bool = False

    def __post_init__(self):
        self.segments = [s if isinstance(s, TrajectorySegment) else TrajectorySegment(*s) for s in self.segments]
        if not self.segments:
            raise ConfigurationError("trajectory schedule is empty")

    def expanded(self) -> list:
        """Segments in run order; ``reverse`` appends the path back, without
        repeating the turning point."""
        segs = list(self.segments)
        if self.reverse:
            segs += list(reversed(self.segments[:-1]))
        return segs


def default_schedule(low: float = 0.4, max_steps: int = 200_000) -> TrajectorySchedule:
    """Activator diffusion stepped up through 0.8 and 1.8, then back down."""
    return TrajectorySchedule(
        [TrajectorySegment("gamma_act", v, max_steps) for v in (low, 0.8, 1.8)],
        reverse=True,
    )


def run_trajectory(
    schedule: TrajectorySchedule,
    params: ReactionParams,
    spec: RingSpec,
    seed: int,
    criterion: SteadyStateCriterion | None = None,
    noise_sigma: float = DEFAULT_NOISE,
    initial_angles=None,
    stride: int = DEFAULT_STRIDE,
    divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
) -> ExperimentRecord:
    """Step the parameters segment by segment without re-initialising.

    Every sample is summarised; turning distances are measured against the
    steady shape at the end of the first segment.  A single time step is
    used for the whole run (the smallest default over all segments).
    """
    criterion = criterion or SteadyStateCriterion()
    segs = schedule.expanded()
    seg_params = []
    p = params
    for s in segs:
        p = p.with_(**{s.param: s.value})
        seg_params.append(p)
    if spec.dt is None:
        dt = min(default_dt(sp, spec.cell_length) for sp in seg_params)
        spec = RingSpec(spec.n_cells, spec.cell_length, dt)
    state = init_state(spec, initial_angles, noise_sigma, seed)
    record = ExperimentRecord(
        _metadata(
            params,
            spec,
            seed,
            criterion,
            noise_sigma,
            spec.dt,
            stride,
            {"schedule": [{"param": s.param, "value": s.value, "max_steps": s.max_steps} for s in segs]},
        )
    )
    record.add_sample(state, 0, True, spec.cell_length)
    for idx, (s, sp) in enumerate(zip(segs, seg_params)):
        start = state.step_index
        state, steady, diverged = _run_segment(
            state, sp, spec, criterion, stride, record, idx, s.max_steps, True, divergence_bound
        )
        last = record.summaries[-1] if record.summaries else None
        seg = {
            "index": idx,
            "param": s.param,
            "value": s.value,
            "params": sp.to_dict(),
            "start_step": start,
            "steady_step": steady,
            "end_step": state.step_index,
            "lobe_count": last.lobe_count if last else None,
            "amplitude": last.amplitude if last else None,
            "valid": last.valid if last else None,
        }
        record.segments.append(seg)
        if idx == 0 and diverged is None:
            record.reference_sample = record.n_samples - 1
            if record.n_samples >= 2:
                record.shape_noise_floor = turning_distance(
                    shape_for_distance(record.summaries[-2]), shape_for_distance(record.summaries[-1])
                )
        if diverged is not None:
            record.diverged = {"segment": idx, "step": diverged}
            break
    record.final_summary = record.summaries[-1]
    record.compute_turning()
    return record


def hysteresis_report(record: ExperimentRecord, tol: float = 1e-6) -> dict:
    """Did returning the parameters also return the shape?

    ``restored`` needs the same lobe count and a final turning distance from
    the reference shape within ``max(tol, 10 * noise floor)``.
    """
    segs = record.segments
    if not segs:
        raise ValueError("record has no segments")
    transitions = []
    prev = segs[0]["lobe_count"]
    for s in segs:
        transitions.append(
            {
                "segment": s["index"],
                "param": s.get("param"),
                "value": s.get("value"),
                "lobe_count": s["lobe_count"],
                "steady_step": s["steady_step"],
                "transition": s["lobe_count"] != prev,
            }
        )
        prev = s["lobe_count"]
    initial = segs[0]["lobe_count"]
    final = segs[-1]["lobe_count"]
    distance = float(record.turning[-1]) if record.turning else 0.0
    floor = record.shape_noise_floor or 0.0
    threshold = max(tol, 10.0 * floor)
    return {
        "initial_lobe_count": initial,
        "final_lobe_count": final,
        "initial_final_turning_distance": distance,
        "shape_noise_floor": floor,
        "distance_threshold": threshold,
        "restored": bool(initial == final and distance <= threshold),
        "diverged": record.diverged,
        "segments": transitions,
    }
