"""Dense Hermitian operators, interpolated Hamiltonian pairs and their spectra."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError

HERMITIAN_ATOL = 1e-12
NORM_SLACK = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)   # |0><1|
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def spectral_norm(a: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian array."""
    if a.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(a))))


@dataclass(frozen=True)
class HermitianOperator:
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"operator must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise DomainError("operator dimension must be >= 2")
        if not np.all(np.isfinite(a)):
            raise DomainError("operator has non-finite entries")
        dev = np.max(np.abs(a - a.conj().T))
        if dev > HERMITIAN_ATOL:
            raise DomainError(f"operator is not Hermitian (max deviation {dev:.3e})")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return spectral_norm(self.entries)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class HamiltonianPair:
    """Endpoints of H(u) = (1 - u) H0 + u H1.

    ``label`` is free-form metadata (family name and size); it never enters
    any computation.
    """

    h0: HermitianOperator
    h1: HermitianOperator
    validate_norm: bool = True
    label: dict = field(default_factory=dict, compare=False)
    diff_norm: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.h0, HermitianOperator):
            object.__setattr__(self, "h0", HermitianOperator(self.h0))
        if not isinstance(self.h1, HermitianOperator):
            object.__setattr__(self, "h1", HermitianOperator(self.h1))
        if self.h0.dim != self.h1.dim:
            raise DomainError(f"dimension mismatch: {self.h0.dim} vs {self.h1.dim}")
        if self.validate_norm:
            for name, h in (("h0", self.h0), ("h1", self.h1)):
                n = h.norm()
                if n > 1 + NORM_SLACK:
                    raise DomainError(
                        f"||{name}|| = {n:.6g} exceeds 1; call rescale_pair() first"
                    )
        diff = self.h1.entries - self.h0.entries
        object.__setattr__(self, "diff_norm", spectral_norm(diff))

    @property
    def dim(self) -> int:
        return self.h0.dim

    @property
    def difference(self) -> np.ndarray:
        return self.h1.entries - self.h0.entries


def rescale_pair(pair: HamiltonianPair) -> HamiltonianPair:
    """Divide both endpoints by max(||H0||, ||H1||) so the pair is normalized."""
    scale = max(pair.h0.norm(), pair.h1.norm())
    if scale == 0.0:
        raise DomainError("both endpoints vanish")
    return HamiltonianPair(
        HermitianOperator(pair.h0.entries / scale),
        HermitianOperator(pair.h1.entries / scale),
        label={**pair.label, "rescaled_by": scale},
    )


def interpolate(pair: HamiltonianPair, u: float) -> HermitianOperator:
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u = {u} outside [0, 1]")
    if u == 0.0:
        return pair.h0
    if u == 1.0:
        return pair.h1
    return HermitianOperator((1.0 - u) * pair.h0.entries + u * pair.h1.entries)


def interpolate_stack(pair: HamiltonianPair, u: np.ndarray) -> np.ndarray:
    """Raw arrays H(u_k) stacked along axis 0; no validation, for hot loops."""
    u = np.asarray(u, dtype=float)
    return pair.h0.entries[None] + u[:, None, None] * pair.difference[None]


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


def build_grover(num_items: int, marked: int = 0) -> HamiltonianPair:
    """Projector pair H0 = I - |phi><phi|, H1 = I - |m><m| on N items."""
    n = int(num_items)
    if n < 2:
        raise DomainError(f"Grover needs N >= 2, got {num_items}")
    if not 0 <= marked < n:
        raise DomainError(f"marked index {marked} outside [0, {n})")
    phi = np.full(n, 1.0 / np.sqrt(n))
    h0 = np.eye(n) - np.outer(phi, phi)
    h1 = np.eye(n)
    h1[marked, marked] = 0.0
    return HamiltonianPair(
        HermitianOperator(h0),
        HermitianOperator(h1),
        label={"family": "grover", "N": n, "marked": int(marked)},
    )


def build_grover_reduced(num_items: int) -> HamiltonianPair:
    """Grover pair restricted to span{|m>, |m_perp>}.

    The uniform state lies in this plane and both endpoints leave it
    invariant, so the ground-state dynamics is exactly two dimensional.
    Basis order is (|m>, |m_perp>).
    """
    n = int(num_items)
    if n < 2:
        raise DomainError(f"Grover needs N >= 2, got {num_items}")
    phi = np.array([1.0 / np.sqrt(n), np.sqrt(1.0 - 1.0 / n)])
    h0 = np.eye(2) - np.outer(phi, phi)
    h1 = np.diag([0.0, 1.0])
    return HamiltonianPair(
        HermitianOperator(h0),
        HermitianOperator(h1),
        label={"family": "grover", "N": n, "reduced": True},
    )


def build_qlsa(matrix_a, vector_b) -> HamiltonianPair:
    """H0 = sigma_x (x) Q_b, H1 = sigma_+ (x) (A Q_b) + sigma_- (x) (Q_b A).

    Q_b = I - |b><b|. The gap used throughout the package is lambda_2 - lambda_1,
    which coincides with the null-space gap of this construction only when A
    is 2x2 (one direction orthogonal to b).
    """
    a = np.asarray(matrix_a, dtype=complex)
    b = np.asarray(vector_b, dtype=complex).reshape(-1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("A must be square")
    if b.shape[0] != a.shape[0]:
        raise DomainError("b has the wrong length")
    if np.max(np.abs(a - a.conj().T)) > HERMITIAN_ATOL:
        raise DomainError("A must be Hermitian")
    if abs(np.linalg.norm(b) - 1.0) > 1e-10:
        raise DomainError(f"b must be normalized (|b| = {np.linalg.norm(b):.12g})")
    eig = np.linalg.eigvalsh(a)
    if eig[0] <= 1e-14 * max(1.0, abs(eig[-1])):
        raise DomainError("A must be positive definite (non-singular)")
    if eig[-1] > 1 + NORM_SLACK:
        raise DomainError(f"||A|| = {eig[-1]:.6g} exceeds 1")
    q = np.eye(a.shape[0]) - np.outer(b, b.conj())
    h0 = np.kron(PAULI_X, q)
    h1 = np.kron(SIGMA_PLUS, a @ q) + np.kron(SIGMA_MINUS, q @ a)
    return HamiltonianPair(
        HermitianOperator(h0),
        HermitianOperator(h1),
        label={"family": "qlsa", "kappa": float(eig[-1] / eig[0]), "n": a.shape[0]},
    )


def random_pair(dim: int, seed: int) -> HamiltonianPair:
    """Seeded random Hermitian endpoints, rescaled to unit norm."""
    if dim < 2:
        raise DomainError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(2):
        x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        mats.append((x + x.conj().T) / 2)
    pair = HamiltonianPair(HermitianOperator(mats[0]), HermitianOperator(mats[1]),
                           validate_norm=False, label={"family": "random", "dim": dim, "seed": seed})
    return rescale_pair(pair)


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])


def spectral_decompose(h: HermitianOperator) -> SpectralDecomposition:
    a = h.entries
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    scale = max(np.max(np.abs(w)), 1.0)
    residual = float(np.max(np.linalg.norm(a @ v - v * w, axis=0)))
    if residual > 1e-9 * scale:
        raise NumericError(f"eigen-residual {residual:.3e} above tolerance", achieved=residual)
    return SpectralDecomposition(_frozen_real(w), _frozen(v))


def _frozen_real(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def ground_projector(dec: SpectralDecomposition,
                     degeneracy_tol: float | None = None) -> HermitianOperator:
    """Projector onto eigenvectors with lambda_i - lambda_1 <= degeneracy_tol.

    The default tolerance is 1e-8 times the spectral radius (at least 1e-8).
    """
    w = dec.eigenvalues
    if degeneracy_tol is None:
        degeneracy_tol = 1e-8 * max(1.0, float(np.max(np.abs(w))))
    if degeneracy_tol <= 0:
        raise DomainError("degeneracy_tol must be positive")
    v = dec.eigenvectors[:, w - w[0] <= degeneracy_tol]
    p = v @ v.conj().T
    return HermitianOperator((p + p.conj().T) / 2)


def gaps_along(pair: HamiltonianPair, u: np.ndarray, chunk: int = 256) -> np.ndarray:
    """lambda_2 - lambda_1 of H(u_k) for every entry of ``u``."""
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape[0])
    for start in range(0, u.shape[0], chunk):
        sl = slice(start, start + chunk)
        w = np.linalg.eigvalsh(interpolate_stack(pair, u[sl]))
        out[sl] = w[:, 1] - w[:, 0]
    return out
