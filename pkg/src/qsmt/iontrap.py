"""Ground-truth model of the two-ion fluorescence readout and the sampler
that generates reference and probing experiment histograms.

The measurement model: a projective measurement onto orthogonal subspaces
(total number of bright ions) followed by a classical noise channel, here
Poissonian photon-count distributions with one mean per subspace. Outcome
index b covers photon counts 0 .. max_count-2 plus one overflow bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import qcore
from ._seeding import STAGE_SIMULATE, substream
from .errors import ConfigError
from .qcore import DensityMatrix, POVM, UnitaryOp
from .serialize import complex_matrix_from_json, complex_matrix_to_json

ORTHOGONALITY_TOL = 1e-10
PROB_SUM_TOL = 1e-8


def _check_orthogonal_projectors(povm: POVM) -> None:
    mats = povm.stack()
    n = len(mats)
    for j in range(n):
        for k in range(j, n):
            prod = mats[j] @ mats[k]
            target = mats[k] if j == k else np.zeros_like(prod)
            if np.max(np.abs(prod - target)) > ORTHOGONALITY_TOL:
                raise ValueError(
                    f"underlying POVM elements {j},{k} are not orthogonal projectors"
                )
    for j in range(n):
        for k in range(j + 1, n):
            if np.max(np.abs(mats[j] - mats[k])) <= ORTHOGONALITY_TOL:
                raise ValueError(f"underlying POVM elements {j},{k} are equal")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to simulate and analyze one tomography study."""

    rho0: DensityMatrix
    unitaries: tuple[UnitaryOp, ...]
    underlying_povm: POVM
    true_sigma_list: tuple[DensityMatrix, ...]
    poisson_means: tuple[float, ...]
    max_count: int = 61
    n_trials: int = 5000
    reference_trial_factor: Fraction = Fraction(10, 9)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "unitaries", tuple(self.unitaries))
        object.__setattr__(self, "true_sigma_list", tuple(self.true_sigma_list))
        object.__setattr__(
            self, "poisson_means", tuple(float(m) for m in self.poisson_means)
        )
        d = self.rho0.d
        if any(u.d != d for u in self.unitaries) or self.underlying_povm.d != d:
            raise ValueError("config dimensions are inconsistent")
        if any(s.d != d for s in self.true_sigma_list):
            raise ValueError("true_sigma_list dimension mismatch")
        _check_orthogonal_projectors(self.underlying_povm)
        if len(self.poisson_means) != len(self.underlying_povm):
            raise ValueError("need one Poisson mean per underlying projector")
        if any(m < 0 for m in self.poisson_means):
            raise ValueError("poisson_means must be nonnegative")
        if len(set(self.poisson_means)) != len(self.poisson_means):
            raise ValueError("poisson_means must be pairwise distinct")
        if self.max_count < 1:
            raise ValueError("max_count must be positive")
        if self.n_trials < 1:
            raise ValueError("n_trials must be positive")
        if not isinstance(self.reference_trial_factor, Fraction):
            object.__setattr__(
                self, "reference_trial_factor", Fraction(self.reference_trial_factor)
            )

    @property
    def d(self) -> int:
        return self.rho0.d

    @property
    def n_subspaces(self) -> int:
        return len(self.underlying_povm)

    @property
    def n_states(self) -> int:
        """Number of state families tau_j (reference state + unknowns)."""
        return 1 + len(self.true_sigma_list)

    def reference_trials(self) -> int:
        return math.ceil(self.n_trials * self.reference_trial_factor)

    def trials_for(self, j: int) -> int:
        return self.reference_trials() if j == 0 else self.n_trials

    def engineered_projectors(self) -> np.ndarray:
        """Rotated subspace projectors U_i^dag Pi_k U_i as an (i, k, d, d) array."""
        pis = self.underlying_povm.stack()
        out = np.empty((len(self.unitaries),) + pis.shape, dtype=complex)
        for i, u in enumerate(self.unitaries):
            ud = u.matrix.conj().T
            for k in range(pis.shape[0]):
                out[i, k] = ud @ pis[k] @ u.matrix
        return out

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "rho0": complex_matrix_to_json(self.rho0.matrix),
            "unitaries": [
                {"label": u.label, "matrix": complex_matrix_to_json(u.matrix)}
                for u in self.unitaries
            ],
            "underlying_povm": [
                complex_matrix_to_json(e.matrix) for e in self.underlying_povm
            ],
            "true_sigma_list": [
                complex_matrix_to_json(s.matrix) for s in self.true_sigma_list
            ],
            "poisson_means": list(self.poisson_means),
            "max_count": self.max_count,
            "n_trials": self.n_trials,
            "reference_trial_factor": [
                self.reference_trial_factor.numerator,
                self.reference_trial_factor.denominator,
            ],
            "seed": self.seed,
        }

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config root must be a JSON object")
        required = [
            "rho0",
            "unitaries",
            "underlying_povm",
            "true_sigma_list",
            "poisson_means",
            "max_count",
            "n_trials",
            "seed",
        ]
        for key in required:
            if key not in obj:
                raise ConfigError(f"{key}: missing required field")
        try:
            rho0 = DensityMatrix(complex_matrix_from_json(obj["rho0"]))
        except ValueError as exc:
            raise ConfigError(f"rho0: {exc}") from exc
        unis = []
        for idx, entry in enumerate(obj["unitaries"]):
            try:
                unis.append(
                    UnitaryOp(
                        complex_matrix_from_json(entry["matrix"]),
                        label=str(entry.get("label", f"U{idx}")),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"unitaries[{idx}]: {exc}") from exc
        try:
            povm = POVM(
                tuple(complex_matrix_from_json(m) for m in obj["underlying_povm"])
            )
        except ValueError as exc:
            raise ConfigError(f"underlying_povm: {exc}") from exc
        sigmas = []
        for idx, entry in enumerate(obj["true_sigma_list"]):
            try:
                sigmas.append(DensityMatrix(complex_matrix_from_json(entry)))
            except ValueError as exc:
                raise ConfigError(f"true_sigma_list[{idx}]: {exc}") from exc
        factor = obj.get("reference_trial_factor", [10, 9])
        try:
            factor = Fraction(int(factor[0]), int(factor[1]))
        except (TypeError, ValueError, IndexError, ZeroDivisionError) as exc:
            raise ConfigError(f"reference_trial_factor: {exc}") from exc
        try:
            return ExperimentConfig(
                rho0=rho0,
                unitaries=tuple(unis),
                underlying_povm=povm,
                true_sigma_list=tuple(sigmas),
                poisson_means=tuple(float(x) for x in obj["poisson_means"]),
                max_count=int(obj["max_count"]),
                n_trials=int(obj["n_trials"]),
                reference_trial_factor=factor,
                seed=int(obj["seed"]),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class HistogramSet:
    """Integer outcome counts, indexed [state family j][unitary i][outcome]."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 3:
            raise ValueError("counts must be a (states, unitaries, outcomes) array")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(c == np.round(c)):
                raise ValueError("histogram counts must be integers")
            c = c.astype(np.int64)
        if np.any(c < 0):
            raise ValueError("histogram counts must be nonnegative")
        c = np.ascontiguousarray(c, dtype=np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n_states(self) -> int:
        return self.counts.shape[0]

    @property
    def n_unitaries(self) -> int:
        return self.counts.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.counts.shape[2]

    def totals(self) -> np.ndarray:
        """Trial count per experiment (j, i)."""
        return self.counts.sum(axis=2)

    def to_json(self) -> dict:
        return {"counts": self.counts.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "HistogramSet":
        return HistogramSet(np.asarray(obj["counts"], dtype=np.int64))


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix P(observed outcome | underlying subspace)."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2:
            raise ValueError("transition matrix must be 2-D")
        if np.any(q < -1e-10) or np.any(q > 1 + 1e-10):
            raise ValueError("transition matrix entries outside [0, 1]")
        sums = q.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > 1e-10:
            raise ValueError("transition matrix rows must sum to 1")
        q = np.clip(q, 0.0, 1.0)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n_subspaces(self) -> int:
        return self.q.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.q.shape[1]

    def to_json(self) -> dict:
        return {"q": [[float(x) for x in row] for row in self.q]}

    @staticmethod
    def from_json(obj: dict) -> "TransitionMatrix":
        return TransitionMatrix(np.asarray(obj["q"], dtype=float))


def build_two_ion_model(
    n_trials: int = 5000,
    max_count: int = 61,
    seed: int = 20260809,
    bell_weight: float = 0.99,
) -> ExperimentConfig:
    """Default two-ion study: bright-bright preparation, collective rotations,
    ion-count projectors, and Poisson photon statistics with means (2, 20, 40).

    The unknown state is an imperfect Bell preparation
    bell_weight * |Phi+><Phi+| + (1 - bell_weight)/4 * identity.
    """
    up_up = np.zeros((4, 4), dtype=complex)
    up_up[0, 0] = 1.0
    rho0 = DensityMatrix(up_up)

    unitaries = (
        qcore.rotation_gate(0.0, 0.0, 2),
        qcore.rotation_gate(np.pi / 2, 0.0, 2),
        qcore.rotation_gate(np.pi, 0.0, 2),
        qcore.rotation_gate(np.pi / 2, np.pi / 2, 2),
    )

    # basis order |up,up>, |up,down>, |down,up>, |down,down>
    pi0 = np.diag([0.0, 0.0, 0.0, 1.0]).astype(complex)  # both dark
    pi1 = np.diag([0.0, 1.0, 1.0, 0.0]).astype(complex)  # exactly one bright
    pi2 = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)  # both bright
    povm = POVM((pi0, pi1, pi2))

    phi_plus = np.zeros(4, dtype=complex)
    phi_plus[0] = phi_plus[3] = 1.0 / np.sqrt(2.0)
    bell = np.outer(phi_plus, phi_plus.conj())
    sigma = bell_weight * bell + (1.0 - bell_weight) / 4.0 * np.eye(4)

    return ExperimentConfig(
        rho0=rho0,
        unitaries=unitaries,
        underlying_povm=povm,
        true_sigma_list=(DensityMatrix(sigma),),
        poisson_means=(2.0, 20.0, 40.0),
        max_count=max_count,
        n_trials=n_trials,
        seed=seed,
    )


def true_transition_matrix(cfg: ExperimentConfig) -> TransitionMatrix:
    """Poisson photon-count rows, upper tail lumped into the overflow bin."""
    m = cfg.max_count
    q = np.zeros((cfg.n_subspaces, m))
    ks = np.arange(m - 1)
    for row, mean in enumerate(cfg.poisson_means):
        q[row, : m - 1] = stats.poisson.pmf(ks, mean)
        q[row, m - 1] = max(0.0, 1.0 - q[row, : m - 1].sum())
    return TransitionMatrix(q)


def population_matrix(cfg: ExperimentConfig) -> np.ndarray:
    """P[i, k] = Tr(Pi_k rho_i) for the known states rho_i = U_i rho0 U_i^dag."""
    pis = cfg.underlying_povm.stack()
    p = np.empty((len(cfg.unitaries), cfg.n_subspaces))
    for i, u in enumerate(cfg.unitaries):
        rho_i = u.matrix @ cfg.rho0.matrix @ u.matrix.conj().T
        for k in range(cfg.n_subspaces):
            p[i, k] = np.real(np.trace(pis[k] @ rho_i))
    return np.clip(p, 0.0, 1.0)


def exact_probabilities(cfg: ExperimentConfig, q: TransitionMatrix | None = None) -> np.ndarray:
    """Outcome distributions p[j, i, b] for every experiment, before sampling."""
    if q is None:
        q = true_transition_matrix(cfg)
    pis = cfg.engineered_projectors()
    states = [cfg.rho0] + list(cfg.true_sigma_list)
    probs = np.empty((len(states), len(cfg.unitaries), q.n_outcomes))
    for j, tau in enumerate(states):
        # pops[i, k] = Tr(Pi_{i,k} tau_j)
        pops = np.real(np.einsum("iknm,mn->ik", pis, tau.matrix))
        probs[j] = pops @ q.q
    return probs


def sample_experiments(cfg: ExperimentConfig, seed: int | None = None) -> HistogramSet:
    """Draw multinomial counts for every (state, unitary) experiment.

    Reference experiments (j = 0) use ceil(reference_trial_factor * n) trials,
    probing experiments use n. Each experiment consumes an independent
    substream keyed by (j, i), so results do not depend on sampling order.
    """
    if seed is None:
        seed = cfg.seed
    probs = exact_probabilities(cfg)
    sums = probs.sum(axis=2)
    if np.max(np.abs(sums - 1.0)) > PROB_SUM_TOL:
        raise ValueError(
            f"experiment probabilities sum to {sums.min():.12f}..{sums.max():.12f}, "
            "not 1; config is inconsistent"
        )
    counts = np.zeros(probs.shape, dtype=np.int64)
    for j in range(probs.shape[0]):
        trials = cfg.trials_for(j)
        for i in range(probs.shape[1]):
            rng = substream(seed, STAGE_SIMULATE, j, i)
            p = probs[j, i] / probs[j, i].sum()
            counts[j, i] = rng.multinomial(trials, p)
    return HistogramSet(counts)
