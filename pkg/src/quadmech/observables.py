"""Physical diagnostics of the mechanical mode.

Conventions fixed here once for the whole artifact:
  * quadratures q = (b + b')/sqrt(2), p = i(b' - b)/sqrt(2), X_theta =
    (b e^{-i theta} + b' e^{i theta})/sqrt(2); vacuum variance is 1/2;
  * squeezing in decibels is -10 log10(v_min / 0.5), so a pure squeezed
    vacuum with magnitude r gives (20/ln 10) r = 8.6859 r dB;
  * the Mandel parameter at <N> = 0 is defined as -1 (number-state limit).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import hilbert, model
from .errors import DegenerateProjectionError

DB_PER_SQUEEZE = 20.0 / math.log(10.0)


def phonon_moments_eigenstate(k, n, p):
    """(<b'b>, <(b'b)^2>) of the dressed state |k, n> from the closed form."""
    if k < 0 or n < 0:
        raise ValueError("need k >= 0 and n >= 0")
    r = model.squeeze_param_r(n, p.g, p.omega_m)
    sh2 = math.sinh(r) ** 2
    mean = k + (2 * k + 1) * sh2
    second = mean ** 2 + (k * k + k + 1) * math.sinh(2 * r) ** 2 / 2.0
    return mean, second


def mandel_q(mean, second_moment):
    """Q = (<N^2> - <N>^2)/<N> - 1; Q = -1 at <N> = 0 by convention."""
    if mean < 0:
        raise ValueError("need mean >= 0")
    if mean == 0.0:
        return -1.0
    return (second_moment - mean * mean) / mean - 1.0


def mandel_q_state(state, spec=None):
    """Mandel Q of the mechanical mode of a state (vector or density matrix)."""
    st = np.asarray(state)
    if spec is not None and st.shape[0] == spec.dim:
        if st.ndim == 1:
            rho_m = reduced_mech_state(st, spec)
        else:
            rho_m = hilbert.partial_trace_cavity(st, spec)
    else:
        rho_m = hilbert.density_matrix(st)
    nvec = np.arange(rho_m.shape[0], dtype=float)
    pop = np.real(np.diag(rho_m))
    mean = float(pop @ nvec)
    second = float(pop @ nvec ** 2)
    return mandel_q(max(mean, 0.0), second)


def poissonian_r(k):
    """Squeeze magnitude making the phonon statistics of |k, n> Poissonian."""
    if k < 0:
        raise ValueError("need k >= 0")
    num = math.sqrt(4 * k ** 4 + 8 * k ** 3 + 12 * k ** 2 + 8 * k + 1) \
        - (2 * k ** 2 + 1)
    sh = math.sqrt(num / (4.0 * (k ** 2 + k + 1)))
    return math.asinh(sh)


def reduced_mech_state(state, spec):
    """Mechanical density matrix of a composite pure state or density matrix."""
    rho = hilbert.density_matrix(np.asarray(state))
    return hilbert.partial_trace_cavity(rho, spec)


def entanglement_entropy(psi, spec, eig_floor=1e-14):
    """Entropy of entanglement (nats) of a pure bipartite state."""
    psi = np.asarray(psi)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"entanglement_entropy needs a normalized state, |psi| = {nrm}")
    rho_m = reduced_mech_state(psi, spec)
    lam = np.linalg.eigvalsh(rho_m)
    lam = lam[lam > eig_floor]
    return float(-np.sum(lam * np.log(lam)))


# ---------------------------------------------------------------------------
# Wigner function

@dataclass
class WignerField:
    """W(q, p) sampled on a rectangular grid; values[i, j] = W(q_axis[j], p_axis[i])."""

    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def mass(self):
        if len(self.q_axis) < 2 or len(self.p_axis) < 2:
            return float("nan")
        dq = self.q_axis[1] - self.q_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(np.sum(self.values) * dq * dp)


def wigner(rho_m, q_axis, p_axis, mass_tol=1e-3):
    """Wigner function of a Fock-basis density matrix on a phase-space grid.

    Normalized so that the integral over dq dp is one (vacuum peak 1/pi).
    Uses the generalized-Laguerre expansion
        W(q, p) = (1/pi) e^{-2|alpha|^2} sum_{m<=n} (2 - delta_mn)
                  Re[rho_nm (-1)^m sqrt(m!/n!) (2 alpha*)^{n-m}] L_m^{n-m}(4|alpha|^2)
    with alpha = (q + i p)/sqrt(2) and an upward Laguerre recurrence in m.
    Warns when the grid misses probability mass.
    """
    rho_m = np.asarray(rho_m)
    M = rho_m.shape[0]
    q_axis = np.asarray(q_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    alpha = (q_axis[None, :] + 1j * p_axis[:, None]) / math.sqrt(2.0)
    x = 4.0 * np.abs(alpha) ** 2
    envelope = (1.0 / math.pi) * np.exp(-0.5 * x)
    W = np.zeros(alpha.shape, dtype=float)
    two_alpha = 2.0 * np.conj(alpha)  # pinned against the displaced-parity form
    for d in range(M):  # d = n - m
        if not np.any(np.abs(np.diagonal(rho_m, offset=d)) > 1e-18):
            continue
        # prefactor (2 alpha)^d sqrt(m!/n!) with n = m + d, via log-gamma
        L_prev = None
        L_curr = np.ones_like(x)  # L_0^d
        for m in range(M - d):
            n = m + d
            coeff = np.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
            c_mn = rho_m[n, m] * ((-1.0) ** m) * coeff
            term = np.real(c_mn * two_alpha ** d) * L_curr
            W += (1.0 if d == 0 else 2.0) * term
            # advance L_m^d -> L_{m+1}^d
            if m == 0:
                L_next = (1.0 + d) - x
            else:
                L_next = ((2 * m + 1 + d - x) * L_curr - (m + d) * L_prev) / (m + 1.0)
            L_prev, L_curr = L_curr, L_next
    W = envelope * W
    field = WignerField(q_axis=q_axis, p_axis=p_axis, values=W)
    m = field.mass()
    deficit = abs(1.0 - m) if np.isfinite(m) else 0.0
    field.mass_deficit = deficit
    if deficit > mass_tol:
        import warnings
        warnings.warn(f"Wigner grid misses probability mass: deficit {deficit:.3e}")
    return field


# ---------------------------------------------------------------------------
# quadrature squeezing

@dataclass(frozen=True)
class SqueezingReport:
    """Minimum quadrature variance of a mechanical state.

    db = -10 log10(v_min / 0.5); positive iff squeezed below vacuum.
    """

    theta_min: float
    v_min: float
    db: float


def covariance_qp(rho_m):
    """2x2 covariance matrix of (q, p) with q = (b+b')/sqrt(2)."""
    rho_m = np.asarray(rho_m)
    M = rho_m.shape[0]
    b = hilbert.destroy(M)
    eb = hilbert.expectation(b, rho_m)
    eb2 = hilbert.expectation(b @ b, rho_m)
    en = hilbert.expectation(b.conj().T @ b, rho_m)
    vqq = eb2.real + en.real + 0.5 - 2.0 * eb.real ** 2
    vpp = -eb2.real + en.real + 0.5 - 2.0 * eb.imag ** 2
    vqp = eb2.imag - 2.0 * eb.real * eb.imag
    return np.array([[vqq, vqp], [vqp, vpp]])


def squeezing_report(rho_m):
    """Closed-form minimum of v(theta) = <X_theta^2> - <X_theta>^2."""
    V = covariance_qp(rho_m)
    half_sum = 0.5 * (V[0, 0] + V[1, 1])
    half_dif = 0.5 * (V[0, 0] - V[1, 1])
    radius = math.hypot(half_dif, V[0, 1])
    v_min = half_sum - radius
    theta_min = 0.5 * math.atan2(-V[0, 1], -half_dif) if radius > 0 else 0.0
    db = -10.0 * math.log10(v_min / 0.5)
    return SqueezingReport(theta_min=theta_min, v_min=float(v_min), db=float(db))


# ---------------------------------------------------------------------------
# conditional state preparation

def condition_on_photon_number(psi, n, spec):
    """Project onto |n>_c and renormalize the mechanical factor.

    Returns (mechanical state vector, outcome probability).
    """
    psi = np.asarray(psi)
    if psi.shape[0] != spec.dim:
        raise hilbert.DimensionMismatchError(
            f"state dim {psi.shape[0]} vs spec dim {spec.dim}")
    if not 0 <= n < spec.n_cav:
        raise ValueError(f"photon number {n} outside cavity truncation")
    mech = psi[n::spec.n_cav]
    prob = float(np.vdot(mech, mech).real)
    if prob < 1e-14:
        raise DegenerateProjectionError(
            f"projection on n={n} has probability {prob:.3e}")
    return mech / math.sqrt(prob), prob


def photon_distribution(psi, spec):
    """Probabilities of every cavity photon number for a composite pure state."""
    psi = np.asarray(psi).reshape(spec.n_mech, spec.n_cav)
    return np.sum(np.abs(psi) ** 2, axis=0)
