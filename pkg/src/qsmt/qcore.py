"""Small-dimension complex linear algebra and the quantum objects (states,
unitaries, measurement operators, observables) used throughout the package.

All wrapper types validate their defining invariants on construction and are
immutable afterwards (the underlying arrays are marked read-only), so they can
be shared freely between threads. Operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10

_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce input to a square complex128 array with finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, order="C")
    a.setflags(write=False)
    return a


def hermiticity_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(a)[0])


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace state on a d-dimensional Hilbert space."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, "density matrix")
        if hermiticity_defect(m) > HERMITIAN_TOL:
            raise ValueError(
                f"density matrix not Hermitian (defect {hermiticity_defect(m):.3e})"
            )
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} differs from 1")
        lo = min_eigenvalue(m)
        if lo < -PSD_TOL:
            raise ValueError(f"density matrix not PSD (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class UnitaryOp:
    """Unitary operator with a human-readable label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, "unitary")
        defect = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if defect > UNITARY_TOL:
            raise ValueError(f"operator not unitary (defect {defect:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MeasurementOperator:
    """Hermitian PSD measurement (POVM element or subspace projector)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, "measurement operator")
        if hermiticity_defect(m) > HERMITIAN_TOL:
            raise ValueError("measurement operator not Hermitian")
        lo = min_eigenvalue(m)
        if lo < -PSD_TOL:
            raise ValueError(f"measurement operator not PSD (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class POVM:
    """Ordered collection of measurement operators summing to the identity."""

    elements: tuple[MeasurementOperator, ...]

    def __post_init__(self):
        elems = tuple(
            e if isinstance(e, MeasurementOperator) else MeasurementOperator(e)
            for e in self.elements
        )
        if not elems:
            raise ValueError("POVM needs at least one element")
        d = elems[0].d
        if any(e.d != d for e in elems):
            raise ValueError("POVM elements have mixed dimensions")
        total = sum(e.matrix for e in elems)
        defect = np.max(np.abs(total - np.eye(d)))
        if defect > COMPLETENESS_TOL:
            raise ValueError(f"POVM incomplete (sum defect {defect:.3e})")
        object.__setattr__(self, "elements", elems)

    @property
    def d(self) -> int:
        return self.elements[0].d

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def stack(self) -> np.ndarray:
        """All elements as one (n, d, d) array."""
        return np.stack([e.matrix for e in self.elements])


@dataclass(frozen=True)
class Observable:
    """Hermitian operator whose expectation value is of interest."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, "observable")
        if hermiticity_defect(m) > HERMITIAN_TOL:
            raise ValueError("observable not Hermitian")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, rho: DensityMatrix) -> float:
        if rho.d != self.d:
            raise ValueError("dimension mismatch between observable and state")
        return float(np.real(np.trace(self.matrix @ rho.matrix)))


def rotation_gate(theta: float, phi: float, num_qubits: int = 1) -> UnitaryOp:
    """Collective single-qubit rotation applied identically to every qubit.

    The single-qubit factor is exp[-i (theta/2) (cos(phi) X + sin(phi) Y)],
    evaluated in closed form: cos(theta/2) I - i sin(theta/2) (n . sigma).
    """
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    axis = np.cos(phi) * _SIGMA_X + np.sin(phi) * _SIGMA_Y
    single = np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * axis
    u = single
    for _ in range(num_qubits - 1):
        u = np.kron(u, single)
    return UnitaryOp(u, label=f"rot(theta={theta:.6g}, phi={phi:.6g})x{num_qubits}")


def evolve_state(rho: DensityMatrix, u: UnitaryOp) -> DensityMatrix:
    """Return U rho U^dagger."""
    if rho.d != u.d:
        raise ValueError("dimension mismatch between state and unitary")
    m = u.matrix @ rho.matrix @ u.matrix.conj().T
    return DensityMatrix(0.5 * (m + m.conj().T))


def heisenberg_povm(povm: POVM, u: UnitaryOp) -> POVM:
    """Map every POVM element F to U^dagger F U (measurement after a rotation)."""
    if povm.d != u.d:
        raise ValueError("dimension mismatch between POVM and unitary")
    ud = u.matrix.conj().T
    return POVM(tuple(MeasurementOperator(ud @ e.matrix @ u.matrix) for e in povm))


def born_probability(op: MeasurementOperator, rho: DensityMatrix) -> float:
    """Outcome probability Tr(F rho), clamped to [0, 1]."""
    if op.d != rho.d:
        raise ValueError("dimension mismatch between operator and state")
    p = float(np.real(np.trace(op.matrix @ rho.matrix)))
    if p < -1e-10 or p > 1 + 1e-10:
        raise ValueError(f"Born probability {p} outside [0, 1] beyond tolerance")
    return min(max(p, 0.0), 1.0)


def _hermitian_basis(d: int) -> np.ndarray:
    """Fixed orthonormal (trace inner product) real basis for Hermitian d x d.

    Order: diagonal units; then all (E_jk + E_kj)/sqrt(2) for j < k row-major;
    then all i(E_jk - E_kj)/sqrt(2) for j < k row-major.
    """
    basis = np.zeros((d * d, d, d), dtype=complex)
    for j in range(d):
        basis[j, j, j] = 1.0
    idx = d
    s = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            basis[idx, j, k] = s
            basis[idx, k, j] = s
            idx += 1
    for j in range(d):
        for k in range(j + 1, d):
            basis[idx, j, k] = 1j * s
            basis[idx, k, j] = -1j * s
            idx += 1
    return basis


_BASIS_CACHE: dict[int, np.ndarray] = {}


def hermitian_basis(d: int) -> np.ndarray:
    if d not in _BASIS_CACHE:
        b = _hermitian_basis(d)
        b.setflags(write=False)
        _BASIS_CACHE[d] = b
    return _BASIS_CACHE[d]


def hermitian_to_vector(m) -> np.ndarray:
    """Expand a Hermitian matrix in the fixed orthonormal basis.

    The map is an isometry: Tr(A B) equals the dot product of the vectors.
    """
    a = as_complex_matrix(m, "hermitian matrix")
    if hermiticity_defect(a) > HERMITIAN_TOL:
        raise ValueError("input not Hermitian within tolerance")
    basis = hermitian_basis(a.shape[0])
    # coefficient_m = Tr(basis_m A); real because both are Hermitian
    return np.real(np.einsum("mij,ji->m", basis, a))


def vector_to_hermitian(v) -> np.ndarray:
    """Inverse of :func:`hermitian_to_vector`."""
    vec = np.asarray(v, dtype=float)
    d = int(round(np.sqrt(vec.size)))
    if d * d != vec.size:
        raise ValueError(f"vector length {vec.size} is not a perfect square")
    basis = hermitian_basis(d)
    return np.einsum("m,mij->ij", vec, basis)
