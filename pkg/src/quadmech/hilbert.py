"""Truncated bosonic Fock-space linear algebra.

All operators are dense complex numpy arrays on the composite
mechanics (x) cavity tensor space.  The basis ordering is mech-major:
the composite index of |k>_m |n>_c is  i = k * n_cav + n,  so a full
operator is  kron(M_mech, C_cav).  Every other module uses the index
map defined here and never recomputes it locally.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, InvalidDimensionError


@dataclass(frozen=True)
class HilbertSpec:
    """Fock truncations of the two modes.

    n_cav: cavity dimension, states |0>..|n_cav-1>
    n_mech: mechanical dimension
    """

    n_cav: int
    n_mech: int

    def __post_init__(self):
        if self.n_cav < 1 or self.n_mech < 1:
            raise InvalidDimensionError(
                f"need n_cav >= 1 and n_mech >= 1, got ({self.n_cav}, {self.n_mech})"
            )

    @property
    def dim(self):
        return self.n_cav * self.n_mech

    def index(self, k, n):
        """Composite index of |k>_m |n>_c (mech-major)."""
        if not (0 <= k < self.n_mech and 0 <= n < self.n_cav):
            raise DimensionMismatchError(
                f"label (k={k}, n={n}) outside ({self.n_mech}, {self.n_cav})"
            )
        return k * self.n_cav + n

    def basis_state(self, k, n):
        """Product basis vector |k>_m |n>_c on the composite space."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(k, n)] = 1.0
        return psi

    def scaled(self, factor):
        """Spec with the mechanical dimension scaled up (truncation check)."""
        return HilbertSpec(self.n_cav, int(np.ceil(self.n_mech * factor)))


def destroy(dim):
    """Bosonic annihilation operator: A[k-1, k] = sqrt(k)."""
    if dim < 1:
        raise InvalidDimensionError(f"destroy needs dim >= 1, got {dim}")
    return np.diag(np.sqrt(np.arange(1.0, dim)), 1).astype(complex)


def create(dim):
    return destroy(dim).conj().T


def number(dim):
    if dim < 1:
        raise InvalidDimensionError(f"number needs dim >= 1, got {dim}")
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def identity(dim):
    if dim < 1:
        raise InvalidDimensionError(f"identity needs dim >= 1, got {dim}")
    return np.eye(dim, dtype=complex)


def tensor(mech, cav, spec=None):
    """Kronecker product in mech-major ordering: (M (x) C)|k>|n> = (M|k>)(C|n>)."""
    mech = np.asarray(mech)
    cav = np.asarray(cav)
    if spec is not None:
        if mech.shape != (spec.n_mech, spec.n_mech) or cav.shape != (spec.n_cav, spec.n_cav):
            raise DimensionMismatchError(
                f"tensor operands {mech.shape} x {cav.shape} do not match spec "
                f"({spec.n_mech}, {spec.n_cav})"
            )
    return np.kron(mech, cav)


def expm(A):
    """Matrix exponential (scaling-and-squaring via scipy)."""
    A = np.asarray(A, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise ValueError("expm: matrix has non-finite entries")
    return scipy.linalg.expm(A)


def expectation(A, state):
    """<psi|A|psi> for a vector, Tr(rho A) for a matrix.  Returns complex."""
    A = np.asarray(A)
    state = np.asarray(state)
    if state.ndim == 1:
        if A.shape[1] != state.shape[0]:
            raise DimensionMismatchError(
                f"operator dim {A.shape} vs state dim {state.shape}"
            )
        return complex(np.vdot(state, A @ state))
    if A.shape[1] != state.shape[0]:
        raise DimensionMismatchError(
            f"operator dim {A.shape} vs density-matrix dim {state.shape}"
        )
    return complex(np.trace(state @ A))


def real_expectation(A, state, imag_tol=1e-9):
    """Real part of an expectation value of a Hermitian observable.

    Returns (value, imag_residue); the residue is only meaningful when it
    exceeds imag_tol, signalling a non-Hermitian operator or a broken state.
    """
    val = expectation(A, state)
    residue = abs(val.imag) if abs(val.imag) > imag_tol else 0.0
    return val.real, residue


def density_matrix(state):
    """|psi><psi| for a vector; pass-through for a matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def partial_trace_cavity(rho, spec):
    """Trace out the cavity; returns the n_mech x n_mech mechanical state."""
    rho = np.asarray(rho)
    if rho.shape != (spec.dim, spec.dim):
        raise DimensionMismatchError(
            f"density matrix {rho.shape} does not match spec dim {spec.dim}"
        )
    r4 = rho.reshape(spec.n_mech, spec.n_cav, spec.n_mech, spec.n_cav)
    return np.einsum("knjn->kj", r4)


def partial_trace_mech(rho, spec):
    """Trace out the mechanics; returns the n_cav x n_cav cavity state."""
    rho = np.asarray(rho)
    if rho.shape != (spec.dim, spec.dim):
        raise DimensionMismatchError(
            f"density matrix {rho.shape} does not match spec dim {spec.dim}"
        )
    r4 = rho.reshape(spec.n_mech, spec.n_cav, spec.n_mech, spec.n_cav)
    return np.einsum("knkm->nm", r4)


def normalize(psi):
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return psi / nrm


def hermiticity_defect(A):
    """max |A - A^dag| relative to max |A| (0 for the zero matrix)."""
    A = np.asarray(A)
    scale = np.max(np.abs(A))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(A - A.conj().T)) / scale)


def check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-8, pos_tol=1e-8):
    """Validate Hermiticity, unit trace and positivity (up to numerical slack)."""
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol * max(1.0, np.max(np.abs(rho))):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr} is not 1")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals.min() < -pos_tol:
        raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")
    return rho
