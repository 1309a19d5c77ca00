"""Hamiltonians and the analytic eigensystem of the quadratic coupling.

Everything is expressed in mechanical-frequency units: hbar = 1 and
omega_m = 1 internally, energies in hbar*omega_m, rates in omega_m.
SI quantities enter only through drive_amplitude and the temperature
to thermal-occupation conversion.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert
from .errors import TruncationError

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23       # J / K


@dataclass(frozen=True)
class ModelParams:
    """Physical rates and frequencies, all scaled by omega_m.

    omega_m is the unit and fixed to 1; it is kept as a field only so the
    formulas below read like their dimensionful counterparts.  Thermal
    occupation: an explicit nbar_m wins over (T, omega_m_hz).
    """

    omega0: float = 2.0       # cavity frequency
    g: float = 0.003          # quadratic coupling
    E: float = 0.0            # drive amplitude
    omega_d: float = 1.0      # drive frequency
    gamma_o: float = 0.0      # optical decay
    gamma_m: float = 0.0      # mechanical decay
    nbar_m: float | None = None
    T: float | None = None           # kelvin
    P_in: float | None = None        # watts
    omega_m_hz: float | None = None  # rad/s, only for T -> nbar conversion
    omega_m: float = field(default=1.0)

    def __post_init__(self):
        if self.g < 0 or self.gamma_o < 0 or self.gamma_m < 0:
            raise ValueError("rates and coupling must be non-negative")
        if self.nbar_m is not None and self.nbar_m < 0:
            raise ValueError("nbar_m must be non-negative")

    def detuning(self):
        return self.omega0 - self.omega_d


@dataclass(frozen=True)
class DressedLabel:
    """Quantum numbers (k, n) of a dressed state plus its squeezing r(n).

    k is the mechanical label, NOT the phonon number unless n = 0.
    """

    k: int
    n: int
    r: float


def drive_amplitude(P_in, gamma_o, omega_o):
    """Drive rate E = sqrt(gamma_o * P_in / (hbar * omega_o)), SI in, rad/s out."""
    if P_in < 0 or gamma_o < 0 or omega_o < 0:
        raise ValueError("drive_amplitude arguments must be non-negative")
    if omega_o == 0:
        raise ZeroDivisionError("omega_o must be positive")
    return math.sqrt(gamma_o * P_in / (HBAR * omega_o))


def squeeze_param_r(n, g, omega_m=1.0):
    """Photon-number dependent squeezing r(n) = atanh[(1 + w_m/2gn)^-1] / 2."""
    if n < 0 or g < 0:
        raise ValueError("need n >= 0 and g >= 0")
    if not (np.isfinite(n) and np.isfinite(g)):
        raise ValueError("non-finite input to squeeze_param_r")
    if n == 0 or g == 0:
        return 0.0
    return 0.5 * math.atanh(1.0 / (1.0 + omega_m / (2.0 * g * n)))


def eigenvalue(k, n, p):
    """Dressed-state energy E_{k,n} = n w0 - w_m/2 + (k + 1/2) sqrt(w_m (w_m + 4 g n))."""
    if k < 0 or n < 0:
        raise ValueError("need k >= 0 and n >= 0")
    radicand = p.omega_m * (p.omega_m + 4.0 * p.g * n)
    if radicand <= 0:
        raise ValueError(f"non-positive radicand {radicand} (unphysical input)")
    return n * p.omega0 - 0.5 * p.omega_m + (k + 0.5) * math.sqrt(radicand)


def squeeze_operator(xi, n_mech):
    """S[xi] = exp[(xi* b^2 - xi b^dag^2) / 2] on the mechanical mode.

    Requires sinh^2|xi| <= n_mech / 10 so that the squeezed vacuum fits
    comfortably inside the truncation.
    """
    xi = complex(xi)
    if math.sinh(abs(xi)) ** 2 > n_mech / 10.0:
        raise TruncationError(
            f"squeeze argument |xi|={abs(xi):.4g} needs <N>={math.sinh(abs(xi))**2:.4g}"
            f" which exceeds n_mech/10 = {n_mech / 10.0:.4g}"
        )
    b = hilbert.destroy(n_mech)
    gen = 0.5 * (np.conj(xi) * (b @ b) - xi * (b.conj().T @ b.conj().T))
    return hilbert.expm(gen)


def dressed_state(k, n, p, spec):
    """Dressed eigenstate |k,n> = S[r(n)] |k>_m |n>_c on the composite space."""
    if not (0 <= k < spec.n_mech and 0 <= n < spec.n_cav):
        raise ValueError(f"label (k={k}, n={n}) out of range for {spec}")
    r = squeeze_param_r(n, p.g, p.omega_m)
    psi = spec.basis_state(k, n)
    if r == 0.0:
        return psi
    S = squeeze_operator(r, spec.n_mech)
    full = hilbert.tensor(S, hilbert.identity(spec.n_cav), spec)
    return full @ psi


def _mech_quadratic(p, spec):
    """w_m b^dag b and (b + b^dag)^2 lifted to the composite space."""
    b = hilbert.destroy(spec.n_mech)
    x = b + b.conj().T
    ic = hilbert.identity(spec.n_cav)
    n_mech_op = hilbert.tensor(b.conj().T @ b, ic, spec)
    x2 = hilbert.tensor(x @ x, ic, spec)
    return n_mech_op, x2


def build_H_Q(p, spec):
    """Undriven Hamiltonian H_Q = w0 a'a + w_m b'b + g a'a (b + b')^2."""
    a = hilbert.destroy(spec.n_cav)
    na = hilbert.tensor(hilbert.identity(spec.n_mech), a.conj().T @ a, spec)
    n_mech_op, x2 = _mech_quadratic(p, spec)
    return p.omega0 * na + p.omega_m * n_mech_op + p.g * (na @ x2)


def build_H_rotating(p, spec):
    """Hamiltonian in the frame rotating at omega_d.

    H = (w0 - w_d) a'a + w_m b'b + g a'a (b + b')^2 + iE (a' - a);
    reduces to build_H_Q with w0 -> Delta when E = 0.
    """
    a = hilbert.destroy(spec.n_cav)
    afull = hilbert.tensor(hilbert.identity(spec.n_mech), a, spec)
    na = afull.conj().T @ afull
    n_mech_op, x2 = _mech_quadratic(p, spec)
    H = p.detuning() * na + p.omega_m * n_mech_op + p.g * (na @ x2)
    if p.E != 0.0:
        H = H + 1j * p.E * (afull.conj().T - afull)
    return H
