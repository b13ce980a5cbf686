"""Two-wing Bell/CHSH experiments with collapse delays.

Wing A sits at x = 0 and wing B at x = L. Both particles enter their
detectors at ``arrival_time``; each wing collapses after its own
independently drawn delay. Outcome labels map to spin values as
0 -> +1 and 1 -> -1, so E = P(00) + P(11) - P(01) - P(10).

With stochastic delays every trial gets its own collapse geometry. The
engines only see a trial's geometry through its causal structure (A before
B, B before A, or spacelike), so one exact distribution per structure is
computed and reused for all trials that share it.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .collapse import DETERMINISTIC, DelayModel, perturbed_singlet, qubit_measurement, wing_rngs
from .engines import CAUSAL, ENGINES, STANDARD, ReductionEvent, Scenario, distribution, resolve_threads
from .errors import ParamError
from .spacetime import SpacetimePoint

# (a, a', b, b'); with E(x, y) = -cos(x - y) these give S = +2 sqrt(2)
OPTIMAL_ANGLES = (0.0, math.pi / 2, 5 * math.pi / 4, 3 * math.pi / 4)
SETTING_NAMES = ("ab", "ab'", "a'b", "a'b'")
SETTING_SIGNS = (1.0, 1.0, 1.0, -1.0)

SPACELIKE, A_FIRST, B_FIRST = "spacelike", "a_first", "b_first"


@dataclass(frozen=True)
class BellConfig:
    """Parameters of one Bell experiment.

    ``separation`` is the wing distance L in light-seconds. ``delay_b``
    defaults to ``delay_a``. In exact mode the outcome statistics of each
    sampled geometry are computed by enumeration; deterministic delays
    then need a single geometry and ``trials`` is ignored.
    """

    separation: float = 3e-5
    eps: float = 1e-3
    eta: float = 0.0
    arrival_time: float = 0.0
    angles: tuple = OPTIMAL_ANGLES
    delay_a: DelayModel = field(default_factory=DelayModel.deterministic)
    delay_b: DelayModel | None = None
    engine: str = CAUSAL
    trials: int = 10_000
    exact: bool = True
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.separation) and self.separation > 0):
            raise ParamError(f"wing separation must be > 0, got {self.separation}")
        if self.engine not in ENGINES:
            raise ParamError(f"unknown engine {self.engine!r}")
        if len(self.angles) != 4 or not all(math.isfinite(a) for a in self.angles):
            raise ParamError("angles must be four finite numbers (a, a', b, b')")
        if not 0.0 <= self.eta < 1.0:
            raise ParamError(f"eta must lie in [0, 1), got {self.eta}")
        if not 0.0 <= self.eps < 0.5:
            raise ParamError(f"eps must lie in [0, 0.5), got {self.eps}")
        if self.engine == CAUSAL and self.eta == 0.0 and self.eps == 0.0:
            raise ParamError("causal engine with projective measurements needs eps > 0 (default 1e-3)")
        if self.trials <= 0:
            raise ParamError("trials must be positive")
        if not math.isfinite(self.arrival_time):
            raise ParamError("arrival_time must be finite")
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    @property
    def wing_b_delay(self) -> DelayModel:
        return self.delay_b or self.delay_a

    @property
    def deterministic(self) -> bool:
        return self.delay_a.family == DETERMINISTIC and self.wing_b_delay.family == DETERMINISTIC

    def replace(self, **changes) -> "BellConfig":
        return dataclasses.replace(self, **changes)

    def setting_angles(self):
        a, a2, b, b2 = self.angles
        return ((a, b), (a, b2), (a2, b), (a2, b2))


@dataclass
class ChshResult:
    correlations: dict
    stderr: dict
    S: float
    S_stderr: float
    p_spacelike: float
    p_spacelike_stderr: float
    n_trials: int
    engine: str
    exact: bool

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "mode": "exact" if self.exact else "sample",
            "n_trials": self.n_trials,
            "E": dict(self.correlations),
            "E_stderr": dict(self.stderr),
            "S": self.S,
            "S_stderr": self.S_stderr,
            "p_spacelike": self.p_spacelike,
            "p_spacelike_stderr": self.p_spacelike_stderr,
        }


def build_bell_scenario(config: BellConfig, delays=(0.0, 0.0), angle_pair=None) -> Scenario:
    """Two-qubit scenario with collapses at ``arrival_time + delta`` on each wing."""
    theta_a, theta_b = angle_pair if angle_pair is not None else (config.angles[0], config.angles[2])
    positions = ((0.0, 0.0, 0.0), (config.separation, 0.0, 0.0))
    times = [config.arrival_time + float(d) for d in delays]
    events = (
        ReductionEvent("A", 0, SpacetimePoint(positions[0], times[0]), qubit_measurement(theta_a, config.eta)),
        ReductionEvent("B", 1, SpacetimePoint(positions[1], times[1]), qubit_measurement(theta_b, config.eta)),
    )
    return Scenario((2, 2), events, perturbed_singlet(config.eps), positions)


def correlation_from_distribution(dist) -> float:
    """E = sum over outcomes of (+1 if both labels agree else -1) times probability."""
    return math.fsum((1.0 if oa == ob else -1.0) * p for (oa, ob), p in dist.items())


def _sample_geometry(config: BellConfig):
    """Collapse times of both wings per trial and the causal class of each trial."""
    n = 1 if config.deterministic else config.trials
    rng_a, rng_b = wing_rngs(config.seed)
    t_a = config.arrival_time + np.asarray(config.delay_a.sample(rng_a, size=n), dtype=float)
    t_b = config.arrival_time + np.asarray(config.wing_b_delay.sample(rng_b, size=n), dtype=float)
    # same arithmetic and tie rule as spacetime.relate, so classes agree with it
    dt = t_b - t_a
    interval = dt * dt - config.separation ** 2
    classes = np.where((interval < 0) | (dt == 0), SPACELIKE, np.where(t_a < t_b, A_FIRST, B_FIRST))
    return t_a - config.arrival_time, t_b - config.arrival_time, classes


def _class_distributions(config, delays_a, delays_b, classes, angle_pairs):
    """Exact outcome distribution per (causal class, setting), from a representative trial."""
    out = {}
    for cls in np.unique(classes):
        k = int(np.flatnonzero(classes == cls)[0])
        for s, pair in enumerate(angle_pairs):
            scenario = build_bell_scenario(config, (delays_a[k], delays_b[k]), pair)
            out[str(cls), s] = distribution(scenario, config.engine)
    return out


def _run(config: BellConfig, angle_pairs, signs):
    delays_a, delays_b, classes = _sample_geometry(config)
    dists = _class_distributions(config, delays_a, delays_b, classes, angle_pairs)
    n = classes.size
    per_trial = np.empty((len(angle_pairs), n))
    for s in range(len(angle_pairs)):
        rng = np.random.default_rng([config.seed, 2, s])
        for cls in np.unique(classes):
            mask = classes == cls
            dist = dists[str(cls), s]
            if config.exact:
                per_trial[s, mask] = correlation_from_distribution(dist)
                continue
            outcomes, probs = zip(*dist.items())
            values = np.array([1.0 if oa == ob else -1.0 for oa, ob in outcomes])
            cdf = np.cumsum(probs)
            idx = np.searchsorted(cdf, rng.random(int(mask.sum())) * cdf[-1], side="right")
            per_trial[s, mask] = values[np.minimum(idx, len(values) - 1)]
    combined = np.asarray(signs) @ per_trial

    def stderr(x):
        return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0

    p = float(np.mean(classes == SPACELIKE))
    return {
        "E": [float(np.mean(row)) for row in per_trial],
        "E_stderr": [stderr(row) for row in per_trial],
        "combined": float(np.mean(combined)),
        "combined_stderr": stderr(combined),
        "p_spacelike": p,
        "p_spacelike_stderr": math.sqrt(p * (1 - p) / n),
        "n": n,
    }


def correlation(config: BellConfig, angle_pair) -> tuple[float, float]:
    """E at one pair of measurement angles, with its standard error."""
    res = _run(config, [tuple(angle_pair)], [1.0])
    return res["E"][0], res["E_stderr"][0]


def chsh(config: BellConfig) -> ChshResult:
    res = _run(config, config.setting_angles(), SETTING_SIGNS)
    e = dict(zip(SETTING_NAMES, res["E"]))
    return ChshResult(
        correlations=e,
        stderr=dict(zip(SETTING_NAMES, res["E_stderr"])),
        S=e["ab"] + e["ab'"] + e["a'b"] - e["a'b'"],
        S_stderr=res["combined_stderr"],
        p_spacelike=res["p_spacelike"],
        p_spacelike_stderr=res["p_spacelike_stderr"],
        n_trials=res["n"],
        engine=config.engine,
        exact=config.exact,
    )


def standard_chsh_value(config: BellConfig) -> float:
    """Exact S of standard quantum theory for the config's state and measurements."""
    ref = config.replace(engine=STANDARD, delay_a=DelayModel.deterministic(0.0), delay_b=None, exact=True)
    return chsh(ref).S


SWEEP_PARAMS = ("L", "lambda")
SWEEP_COLUMNS = ("param", "value", "p_spacelike", "p_spacelike_stderr", "S_direct", "S_stderr",
                 "S_mixture_prediction")


@dataclass
class SweepRow:
    param: str
    value: float
    p_spacelike: float
    p_spacelike_stderr: float
    S_direct: float
    S_stderr: float
    S_mixture_prediction: float

    def as_tuple(self):
        return tuple(getattr(self, c) for c in SWEEP_COLUMNS)


def _sweep_point(config: BellConfig, parameter: str, value: float) -> SweepRow:
    if parameter == "L":
        point = config.replace(separation=value)
    else:
        point = config.replace(delay_a=DelayModel.exponential(value), delay_b=None)
    res = chsh(point)
    s_std = standard_chsh_value(point)
    return SweepRow(parameter, value, res.p_spacelike, res.p_spacelike_stderr,
                    res.S, res.S_stderr, (1.0 - res.p_spacelike) * s_std)


def sweep(config: BellConfig, parameter: str, grid, threads: int = 1) -> list[SweepRow]:
    """CHSH value and spacelike fraction across a grid of separations or delay rates.

    The mixture prediction is (1 - p_spacelike) * S_standard: spacelike
    trials contribute nothing under the causal engine and timelike trials
    reproduce standard quantum theory. Every grid point reuses the same
    seed, so the underlying random draws are shared across the grid.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ParamError("sweep grid is empty")
    if parameter not in SWEEP_PARAMS:
        raise ParamError(f"parameter must be one of {SWEEP_PARAMS}, got {parameter!r}")
    workers = min(resolve_threads(threads), len(grid))
    if workers == 1:
        return [_sweep_point(config, parameter, v) for v in grid]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, [config] * len(grid), [parameter] * len(grid), grid))
