"""Dense state-vector algebra on small tensor-product spaces.

Basis convention (big-endian): the amplitude of ``|i_0 i_1 ... i_{n-1}>``
sits at flat index ``sum_k i_k * prod_{m>k} d_m``, i.e. site 0 is the most
significant digit. This matches ``np.kron(A_0, np.kron(A_1, ...))`` and a
C-order reshape of the amplitude vector to ``dims``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionError, ZeroNormState

EPS_ZERO = 1e-12
TOL_NORM = 1e-9
MAX_DIM = 2**16


def validate_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) < 1:
        raise DimensionError("at least one site is required")
    if any(d < 2 for d in dims):
        raise DimensionError(f"every site dimension must be >= 2, got {dims}")
    if int(np.prod(dims, dtype=object)) > MAX_DIM:
        raise DimensionError(f"total dimension {int(np.prod(dims, dtype=object))} exceeds {MAX_DIM}")
    return dims


def _frozen(array) -> np.ndarray:
    array = np.array(array, dtype=np.complex128)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector over the tensor basis of ``dims``."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = validate_dims(self.dims)
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise DimensionError(f"{amps.size} amplitudes do not fit dims {dims}")
        if not np.all(np.isfinite(amps)):
            raise DimensionError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > TOL_NORM:
            raise DimensionError(f"state norm is {norm!r}, expected 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vector, dims) -> "PureState":
        """Normalize an arbitrary nonzero vector into a state."""
        vector = np.asarray(vector, dtype=np.complex128).reshape(-1)
        return normalize(vector, float(np.vdot(vector, vector).real), dims)

    @classmethod
    def basis(cls, indices, dims) -> "PureState":
        dims = validate_dims(dims)
        vec = np.zeros(int(np.prod(dims)), dtype=np.complex128)
        vec[np.ravel_multi_index(tuple(indices), dims)] = 1.0
        return cls(vec, dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True, eq=False)
class SiteOperator:
    site: int
    matrix: np.ndarray

    def __post_init__(self):
        matrix = _frozen(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"site operator must be square, got shape {matrix.shape}")
        if self.site < 0:
            raise DimensionError(f"negative site index {self.site}")
        object.__setattr__(self, "matrix", matrix)


def _check_site(op: SiteOperator, dims) -> None:
    if op.site >= len(dims):
        raise DimensionError(f"site {op.site} out of range for {len(dims)} sites")
    if op.matrix.shape[0] != dims[op.site]:
        raise DimensionError(
            f"operator is {op.matrix.shape[0]}x{op.matrix.shape[0]} but site {op.site} has dim {dims[op.site]}"
        )


def apply_site(matrix, site: int, dims, vector) -> np.ndarray:
    """Apply a single-site matrix to a flat vector without building the Kronecker product."""
    tensor = np.asarray(vector).reshape(dims)
    out = np.tensordot(matrix, tensor, axes=([1], [site]))
    return np.moveaxis(out, 0, site).reshape(-1)


class EmbeddedOperator:
    """``I x ... x A x ... x I`` acting on the full space, applied slice-wise."""

    def __init__(self, op: SiteOperator, dims):
        self.dims = validate_dims(dims)
        _check_site(op, self.dims)
        self.op = op

    @property
    def shape(self):
        dim = int(np.prod(self.dims))
        return (dim, dim)

    def apply(self, vector) -> np.ndarray:
        vector = np.asarray(vector)
        if vector.size != self.shape[0]:
            raise DimensionError(f"vector of length {vector.size} does not match dimension {self.shape[0]}")
        return apply_site(self.op.matrix, self.op.site, self.dims, vector)

    def __matmul__(self, vector):
        return self.apply(vector)

    def toarray(self) -> np.ndarray:
        factors = [
            self.op.matrix if k == self.op.site else np.eye(d, dtype=np.complex128)
            for k, d in enumerate(self.dims)
        ]
        return reduce(np.kron, factors)


def embed(op: SiteOperator, dims) -> EmbeddedOperator:
    return EmbeddedOperator(op, dims)


def apply_and_norm(op: SiteOperator, state: PureState) -> tuple[np.ndarray, float]:
    """Return the unnormalized vector ``A psi`` and its squared norm."""
    vec = embed(op, state.dims).apply(state.amplitudes)
    return vec, float(np.vdot(vec, vec).real)


def normalize(vector, norm_sq: float, dims, chain=()) -> PureState:
    """Rescale a reduced vector to unit norm.

    Raises ZeroNormState when ``norm_sq <= EPS_ZERO``; ``chain`` is attached
    to the exception for diagnostics.
    """
    if not norm_sq > EPS_ZERO:
        raise ZeroNormState(chain, norm_sq)
    return PureState(np.asarray(vector) / np.sqrt(norm_sq), dims)
