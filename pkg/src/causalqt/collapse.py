"""Reduction-operator sets, initial states and collapse-delay models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CompletenessError, DimensionError, ParamError
from .linalg import PureState, SiteOperator

TOL_COMPLETE = 1e-9

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def completeness_defect(ops) -> float:
    """Max-abs entry of ``sum_j A_j^dagger A_j - I``."""
    ops = [np.asarray(a, dtype=np.complex128) for a in ops]
    total = sum(a.conj().T @ a for a in ops)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Complete set of reduction operators on one site's internal space.

    Outcome ``j`` of the measurement corresponds to ``ops[j]``; ``labels``
    are display names for those outcomes.
    """

    ops: tuple
    labels: tuple = ()

    def __post_init__(self):
        ops = []
        for a in self.ops:
            a = np.array(a, dtype=np.complex128)
            a.setflags(write=False)
            ops.append(a)
        if not ops:
            raise ParamError("a Kraus set needs at least one operator")
        d = ops[0].shape[0]
        for a in ops:
            if a.shape != (d, d):
                raise DimensionError(f"Kraus operators must all be {d}x{d}, got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ParamError("Kraus operators must be finite")
        defect = completeness_defect(ops)
        if defect > TOL_COMPLETE:
            raise CompletenessError(f"sum A^dagger A deviates from identity by {defect:.3g}")
        labels = tuple(self.labels) or tuple(range(len(ops)))
        if len(labels) != len(ops):
            raise ParamError(f"{len(labels)} labels for {len(ops)} operators")
        object.__setattr__(self, "ops", tuple(ops))
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def __len__(self):
        return len(self.ops)

    def on_site(self, site: int) -> list[SiteOperator]:
        return [SiteOperator(site, a) for a in self.ops]


def qubit_basis_projectors(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the +/- eigenvectors of cos(theta) Z + sin(theta) X."""
    n_sigma = math.cos(theta) * _Z + math.sin(theta) * _X
    return (_I2 + n_sigma) / 2, (_I2 - n_sigma) / 2


def projective_qubit(theta: float) -> KrausSet:
    """Two-outcome projective qubit measurement along angle ``theta`` in the x-z plane.

    Outcome 0 projects onto cos(theta/2)|0> + sin(theta/2)|1>, outcome 1 onto
    the orthogonal vector. ``theta = 0`` gives {P0, P1}.
    """
    return KrausSet(qubit_basis_projectors(theta))


def softened_projectors(theta: float, eta: float) -> KrausSet:
    """Strictly positive two-outcome operators sqrt((1-eta) P_j + eta/2 I)."""
    if not 0.0 < eta < 1.0:
        raise ParamError(f"eta must lie in (0, 1), got {eta}")
    hi, lo = math.sqrt(1.0 - eta / 2.0), math.sqrt(eta / 2.0)
    ops = []
    for p in qubit_basis_projectors(theta):
        # P and I - P are orthogonal projectors, so the square root is taken eigenvalue-wise
        ops.append(hi * p + lo * (_I2 - p))
    return KrausSet(tuple(ops))


def qubit_measurement(theta: float, eta: float = 0.0) -> KrausSet:
    return softened_projectors(theta, eta) if eta > 0 else projective_qubit(theta)


def random_kraus_set(dim: int, n_ops: int, rng: np.random.Generator) -> KrausSet:
    """Random complete Kraus set from a Haar-ish isometry (QR of a Gaussian block)."""
    block = rng.normal(size=(dim * n_ops, dim)) + 1j * rng.normal(size=(dim * n_ops, dim))
    q, r = np.linalg.qr(block)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return KrausSet(tuple(q[k * dim:(k + 1) * dim] for k in range(n_ops)))


def singlet() -> PureState:
    return perturbed_singlet(0.0)


def perturbed_singlet(eps: float) -> PureState:
    """eps|00> + c|01> - c|10> + eps|11> with c = sqrt((1 - 2 eps^2)/2)."""
    if not 0.0 <= eps < 0.5:
        raise ParamError(f"eps must lie in [0, 0.5), got {eps}")
    c = math.sqrt((1.0 - 2.0 * eps * eps) / 2.0)
    return PureState(np.array([eps, c, -c, eps], dtype=np.complex128), (2, 2))


DETERMINISTIC = "deterministic"
EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class DelayModel:
    """Distribution of the lag between detector entry and collapse.

    ``delta0`` (s) is used by the deterministic family, ``rate`` (1/s) by the
    exponential family.
    """

    family: str = DETERMINISTIC
    delta0: float = 0.0
    rate: float = field(default=math.inf)

    def __post_init__(self):
        if self.family == DETERMINISTIC:
            if not (math.isfinite(self.delta0) and self.delta0 >= 0):
                raise ParamError(f"delta0 must be finite and >= 0, got {self.delta0}")
        elif self.family == EXPONENTIAL:
            if not (math.isfinite(self.rate) and self.rate > 0):
                raise ParamError(f"rate must be finite and > 0, got {self.rate}")
        else:
            raise ParamError(f"unknown delay family {self.family!r}")

    @classmethod
    def deterministic(cls, delta0: float = 0.0) -> "DelayModel":
        return cls(DETERMINISTIC, delta0=float(delta0))

    @classmethod
    def exponential(cls, rate: float) -> "DelayModel":
        return cls(EXPONENTIAL, rate=float(rate))

    def sample(self, rng: np.random.Generator, size=None):
        if self.family == DETERMINISTIC:
            return self.delta0 if size is None else np.full(size, self.delta0)
        return rng.exponential(1.0 / self.rate, size=size)


def sample_delay(model: DelayModel, rng: np.random.Generator) -> float:
    return float(model.sample(rng))


def wing_rngs(seed: int, n_wings: int = 2) -> list[np.random.Generator]:
    """Independent per-wing streams derived from ``(seed, wing_index)``."""
    return [np.random.default_rng([seed, wing]) for wing in range(n_wings)]


def spacelike_probability(model: DelayModel, separation: float, n_trials: int, seed: int = 0,
                          model_b: DelayModel | None = None) -> float:
    """Monte Carlo estimate of P(|delta_A - delta_B| < L) for simultaneous arrivals.

    ``separation`` is the wing distance L in light-seconds; ``model_b``
    defaults to ``model`` (identically distributed wings).
    """
    if n_trials <= 0:
        raise ParamError("n_trials must be positive")
    if not separation > 0:
        raise ParamError(f"wing separation must be > 0, got {separation}")
    rng_a, rng_b = wing_rngs(seed)
    delta_a = model.sample(rng_a, size=n_trials)
    delta_b = (model_b or model).sample(rng_b, size=n_trials)
    return float(np.mean(np.abs(delta_a - delta_b) < separation))


def spacelike_probability_exact(model: DelayModel, separation: float) -> float:
    """Closed form for identically distributed wings.

    The difference of two iid exponentials is Laplace(0, 1/rate), hence
    P(|D| < L) = 1 - exp(-rate * L).
    """
    if model.family == DETERMINISTIC:
        return 1.0 if separation > 0 else 0.0
    return -math.expm1(-model.rate * separation)
