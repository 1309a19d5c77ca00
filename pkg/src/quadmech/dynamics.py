"""Time evolution: analytic propagator, numeric oracles, Lindblad dynamics,
and the undriven / Floquet spectral sweeps.

Closed-system evolution exploits photon-number conservation of the undriven
Hamiltonian and runs per photon block.  The analytic propagator follows the
disentangled form U = e^{i w_m t / 2} S[xi] e^{i eta (b'b + 1/2)} per photon
sector, with the phase eta tracked branch-continuously (the arctan form is
only correct up to branch choice; the matrix-exponential oracle pins it).
"""

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq, minimize_scalar

from . import hilbert, model
from .errors import StepSizeError, TruncationError

KB = model.KB
HBAR = model.HBAR


# ---------------------------------------------------------------------------
# grids and trajectories

@dataclass(frozen=True)
class TimeGrid:
    """Uniform sample grid, times in units of 1/omega_m."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("need t_end > t_start")
        if self.n_steps < 1:
            raise ValueError("need n_steps >= 1")

    @property
    def times(self):
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)


@dataclass
class Trajectory:
    """Sampled evolution: states[i] is the state at times[i]."""

    times: np.ndarray
    states: list
    metadata: dict


# ---------------------------------------------------------------------------
# analytic propagator (per photon sector)

@dataclass(frozen=True)
class SectorPhase:
    """Disentangling parameters of photon sector n at time t (omega_m units)."""

    n: int
    r_n: float      # 2 g n
    chi_n: float    # sqrt(w_m (w_m + 4 g n))
    p_n: float      # -2 (w_m + 2 g n)
    eta: float      # branch-continuous rotation phase, eta(0) = 0
    xi: complex     # squeezing argument


def sector_phase(n, t, p):
    """Closed-form disentangling phases of sector n, branch-continuous in t.

    eta is the unwrapped angle of cos(chi t) + i (p / 2 chi) sin(chi t);
    p < 0 makes it monotonically decreasing, so unwrapping just subtracts
    2 pi per crossing of the negative real axis.
    """
    if n < 0:
        raise ValueError("need n >= 0")
    if not np.isfinite(t):
        raise ValueError("non-finite time")
    wm = p.omega_m
    r = 2.0 * p.g * n
    chi = math.sqrt(wm * (wm + 4.0 * p.g * n))
    pn = -2.0 * (wm + 2.0 * p.g * n)
    ph = chi * t
    z_re = math.cos(ph)
    z_im = (pn / (2.0 * chi)) * math.sin(ph)
    winding = math.floor((ph + math.pi) / (2.0 * math.pi))
    eta = math.atan2(z_im, z_re) - 2.0 * math.pi * winding
    xi = np.exp(1j * (eta + 0.5 * math.pi)) * math.asinh(r * math.sin(ph) / chi)
    return SectorPhase(n=n, r_n=r, chi_n=chi, p_n=pn, eta=eta, xi=complex(xi))


def max_sector_squeeze(n, p):
    """max_t |xi(n, t)| = asinh(r_n / chi_n), reached at chi t = pi/2."""
    if n == 0 or p.g == 0:
        return 0.0
    r = 2.0 * p.g * n
    chi = math.sqrt(p.omega_m * (p.omega_m + 4.0 * p.g * n))
    return math.asinh(r / chi)


def sector_coefficient(n, t, alpha, p, eta=None):
    """Coefficient c(n, t) of the analytic state, including the sector phase.

    c(n,t) = alpha^n e^{-|alpha|^2/2} e^{-i n w0 t} e^{i (w_m t + eta) / 2} / sqrt(n!).
    The matrix-exponential oracle fixes the sign of eta in the phase factor;
    e^{-i n w0 t} is the free photon phase of sector n.
    """
    if eta is None:
        eta = sector_phase(n, t, p).eta
    alpha = complex(alpha)
    log_mag = n * np.log(alpha) if alpha != 0 else (0.0 if n == 0 else -np.inf)
    if n > 0 and alpha == 0:
        return 0.0j
    amp = np.exp(log_mag - 0.5 * abs(alpha) ** 2 - 0.5 * math.lgamma(n + 1))
    return amp * np.exp(0.5j * (p.omega_m * t + eta) - 1j * n * p.omega0 * t)


def analytic_state(t, alpha, p, spec):
    """Closed-form state from the initial |0>_m |alpha>_c.

    |psi(t)> = sum_n c(n,t) S[xi(n,t)]|0>_m (x) |n>_c, the sum truncated at
    the cavity dimension.  Requires |alpha|^2 <= n_cav / 4 so the Poisson
    tail beyond the truncation is negligible.
    """
    alpha = complex(alpha)
    if abs(alpha) ** 2 > spec.n_cav / 4.0:
        raise TruncationError(
            f"|alpha|^2 = {abs(alpha)**2:.4g} exceeds n_cav/4 = {spec.n_cav / 4.0:.4g}"
        )
    psi = np.zeros(spec.dim, dtype=complex)
    vac = np.zeros(spec.n_mech, dtype=complex)
    vac[0] = 1.0
    for n in range(spec.n_cav):
        ph = sector_phase(n, t, p)
        c = sector_coefficient(n, t, alpha, p, eta=ph.eta)
        if abs(c) < 1e-18:
            continue
        if ph.xi == 0:
            mech = vac
        else:
            try:
                mech = model.squeeze_operator(ph.xi, spec.n_mech) @ vac
            except TruncationError as exc:
                raise TruncationError(f"photon sector n={n}: {exc}") from exc
        psi[n::spec.n_cav] += c * mech
    return psi


# ---------------------------------------------------------------------------
# closed-system numeric oracle

def _photon_conserving(H, spec, tol=1e-10):
    a = hilbert.destroy(spec.n_cav)
    na = hilbert.tensor(hilbert.identity(spec.n_mech), a.conj().T @ a, spec)
    comm = H @ na - na @ H
    scale = max(1.0, np.max(np.abs(H)))
    return np.max(np.abs(comm)) <= tol * scale


def evolve_closed_numeric(psi0, grid, H, spec=None):
    """Schroedinger evolution |psi(t)> = expm(-iHt)|psi0> at every sample.

    H must be Hermitian.  When `spec` is given and H conserves photon
    number, evolution runs per photon block via one eigendecomposition per
    block; otherwise a single full-space eigendecomposition is used.
    """
    H = np.asarray(H)
    psi0 = np.asarray(psi0, dtype=complex)
    if hilbert.hermiticity_defect(H) > 1e-12:
        raise ValueError("evolve_closed_numeric requires a Hermitian Hamiltonian")
    times = grid.times
    states = [np.empty_like(psi0) for _ in times]

    def fill(idx, block):
        w, V = np.linalg.eigh(block)
        coeff = V.conj().T @ psi0[idx]
        for j, t in enumerate(times):
            states[j][idx] = V @ (np.exp(-1j * w * t) * coeff)

    if spec is not None and _photon_conserving(H, spec):
        method = "per-photon-block eigh"
        for n in range(spec.n_cav):
            idx = np.arange(n, spec.dim, spec.n_cav)
            fill(idx, H[np.ix_(idx, idx)])
    else:
        method = "full-space eigh"
        fill(np.arange(H.shape[0]), H)

    drift = max(abs(np.linalg.norm(s) - np.linalg.norm(psi0)) for s in states)
    return Trajectory(times=times, states=states,
                      metadata={"integrator": method, "norm_drift": drift})


# ---------------------------------------------------------------------------
# dissipation

def thermal_occupation(omega_m_hz, T):
    """Bose occupation nbar = 1 / (exp(hbar w / kB T) - 1); T = 0 returns 0."""
    if omega_m_hz <= 0:
        raise ValueError("need omega_m_hz > 0")
    if T < 0:
        raise ValueError("need T >= 0")
    if T == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega_m_hz / (KB * T))


def resolve_nbar(p):
    """Thermal occupation per the precedence rule: explicit nbar_m wins."""
    if p.nbar_m is not None:
        return float(p.nbar_m)
    if p.T is not None and p.omega_m_hz is not None:
        return thermal_occupation(p.omega_m_hz, p.T)
    return 0.0


def _lindblad_ops(p, spec):
    a = hilbert.tensor(hilbert.identity(spec.n_mech), hilbert.destroy(spec.n_cav), spec)
    b = hilbert.tensor(hilbert.destroy(spec.n_mech), hilbert.identity(spec.n_cav), spec)
    return a, b


def lindblad_rhs(rho, p, H, spec):
    """Right-hand side of the master equation.

    d rho/dt = -i [H, rho]
               + gamma_o/2 (2 a rho a' - a'a rho - rho a'a)
               + gamma_m/2 (nbar+1) (2 b rho b' - b'b rho - rho b'b)
               + gamma_m/2 nbar (2 b' rho b - b b' rho - rho b b').

    The optical bath is at zero temperature; the mechanical bath carries
    the resolved thermal occupation.
    """
    rho = np.asarray(rho)
    H = np.asarray(H)
    if rho.shape != (spec.dim, spec.dim) or H.shape != rho.shape:
        raise hilbert.DimensionMismatchError(
            f"shapes rho {rho.shape}, H {H.shape} vs spec dim {spec.dim}"
        )
    a, b = _lindblad_ops(p, spec)
    nbar = resolve_nbar(p)
    out = -1j * (H @ rho - rho @ H)
    if p.gamma_o > 0:
        ad = a.conj().T
        na = ad @ a
        out += 0.5 * p.gamma_o * (2.0 * a @ rho @ ad - na @ rho - rho @ na)
    if p.gamma_m > 0:
        bd = b.conj().T
        nb = bd @ b
        out += 0.5 * p.gamma_m * (nbar + 1.0) * (2.0 * b @ rho @ bd - nb @ rho - rho @ nb)
        if nbar > 0:
            nbt = b @ bd
            out += 0.5 * p.gamma_m * nbar * (2.0 * bd @ rho @ b - nbt @ rho - rho @ nbt)
    return out


def _dissipator_super(c):
    """Sparse superoperator of D[c]: c rho c' - (c'c rho + rho c'c)/2, row-major vec."""
    c = sp.csr_matrix(c)
    cd = c.conj().T
    n = c.shape[0]
    eye = sp.identity(n, format="csr")
    cc = (cd @ c).tocsr()
    return sp.kron(c, c.conj()) - 0.5 * (sp.kron(cc, eye) + sp.kron(eye, cc.T))


def lindblad_superoperator(p, H, spec):
    """Sparse Lindblad generator acting on the row-major vectorized rho."""
    Hs = sp.csr_matrix(np.asarray(H))
    n = Hs.shape[0]
    eye = sp.identity(n, format="csr")
    L = -1j * (sp.kron(Hs, eye) - sp.kron(eye, Hs.T))
    a, b = _lindblad_ops(p, spec)
    nbar = resolve_nbar(p)
    if p.gamma_o > 0:
        L = L + p.gamma_o * _dissipator_super(a)
    if p.gamma_m > 0:
        L = L + p.gamma_m * (nbar + 1.0) * _dissipator_super(b)
        if nbar > 0:
            L = L + p.gamma_m * nbar * _dissipator_super(b.conj().T)
    L = L.tocsr()
    L.eliminate_zeros()
    return L


def _csr_matvec_into(L, scale=1.0):
    """Accumulating matvec y += scale * (L x) bound to scipy's raw CSR kernel.

    Avoids the wrapper allocation on every call, which dominates the cost at
    the small vector sizes used here; the scale is folded into a copy of the
    matrix data.  Falls back to the public product if the kernel is
    unavailable.
    """
    data = L.data * scale if scale != 1.0 else L.data
    try:
        from scipy.sparse import _sparsetools

        n_row, n_col = L.shape
        indptr, indices = L.indptr, L.indices

        def matvec(x, y):
            _sparsetools.csr_matvec(n_row, n_col, indptr, indices, data, x, y)
    except ImportError:  # pragma: no cover
        M = sp.csr_matrix((data, L.indices, L.indptr), shape=L.shape)

        def matvec(x, y):
            y += M @ x
    return matvec


def _characteristic_frequency(p, spec):
    """Largest model frequency in the rotating frame (not the truncation-scaled
    spectral radius, which is handled by the separate stability refusal)."""
    nbar = resolve_nbar(p)
    return max(p.omega_m, p.gamma_o, p.gamma_m * (nbar + 1.0),
               4.0 * p.g * (spec.n_cav - 1))


def integrate_master(rho0, grid, p, spec, h=None):
    """Fixed-step RK4 integration of the master equation, rotating frame at w0.

    The trajectory Hamiltonian is w_m b'b + g a'a (b+b')^2 (the rotating
    transformation removes w0); driving is out of scope here.  The state is
    kept exactly Hermitian at every stage by propagating the upper triangle
    only and rebuilding the rest by conjugation; trace is conserved by the
    Lindblad structure up to roundoff.  Refuses steps that violate the RK4
    stability bound.
    """
    if p.E != 0.0:
        raise ValueError("integrate_master handles undriven dynamics only (E = 0)")
    rho0 = hilbert.density_matrix(np.asarray(rho0, dtype=complex))
    H = model.build_H_rotating(replace(p, omega_d=p.omega0), spec)
    L = lindblad_superoperator(p, H, spec)

    if h is None:
        h = min(0.01, 0.05 / _characteristic_frequency(p, spec))
    w = np.linalg.eigvalsh(H)
    nbar = resolve_nbar(p)
    radius = (w.max() - w.min()) + p.gamma_o * spec.n_cav \
        + p.gamma_m * (2.0 * nbar + 1.0) * spec.n_mech
    if h * radius > 2.5:
        raise StepSizeError(
            f"step h={h:.3g} times generator radius ~{radius:.3g} exceeds the "
            f"RK4 stability bound; use h <= {2.5 / radius:.3g}"
        )

    times = grid.times
    d = spec.dim
    states = [rho0.copy()]
    pos_warning = None
    # The generator maps Hermitian matrices to Hermitian matrices, and every
    # stage of the Horner recursion below has a Hermitian argument, so only
    # the upper triangle is propagated (half the matvec work).  The lower
    # triangle is rebuilt by conjugation before each application of L, which
    # symmetrizes the state exactly at every stage.
    iu, ju = np.triu_indices(d)
    upper = iu * d + ju
    il, jl = np.tril_indices(d, -1)
    lower = il * d + jl
    mirror = np.full(d * d, -1)
    mirror[upper] = np.arange(upper.size)
    mirror = mirror[jl * d + il]  # half-vector source for each lower slot
    L_half = L[upper]
    v = rho0.ravel()[upper].copy()
    full = np.empty(d * d, dtype=complex)
    buf = (np.empty_like(v), np.empty_like(v))
    hh_cached = None
    matvecs = None
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        m = max(1, int(math.ceil(dt / h - 1e-12)))
        hh = dt / m
        if hh != hh_cached:
            # the generator is linear and autonomous, so the classical RK4
            # update collapses to the order-4 Taylor polynomial in hh*L,
            # evaluated in Horner form with the step factors folded into
            # pre-scaled copies of the generator:
            # v <- v + hh L (v + hh/2 L (v + hh/3 L (v + hh/4 L v)))
            matvecs = tuple(_csr_matvec_into(L_half, scale=hh / k)
                            for k in (4, 3, 2, 1))
            hh_cached = hh
        for j in range(m):
            src = v
            for k in (0, 1, 2):
                full[upper] = src
                full[lower] = np.conjugate(src[mirror])
                dst = buf[k & 1]
                dst[:] = v
                matvecs[k](full, dst)
                src = dst
            full[upper] = src
            full[lower] = np.conjugate(src[mirror])
            matvecs[3](full, v)  # v already seeds the outermost stage
        full[upper] = v
        full[lower] = np.conjugate(v[mirror])
        rho = full.reshape(d, d).copy()
        states.append(rho)
        lam_min = np.linalg.eigvalsh(rho).min()
        if lam_min < -1e-5 and pos_warning is None:
            pos_warning = (f"positivity violated at t={times[i + 1]:.6g}: "
                           f"min eigenvalue {lam_min:.3e}")
    trace_drift = max(abs(np.trace(s).real - np.trace(rho0).real) for s in states)
    meta = {
        "integrator": "rk4-taylor-hermitian",
        "step": h,
        "trace_drift": trace_drift,
        "hermiticity_deviation": 0.0,  # exact by representation
    }
    if pos_warning:
        meta["warning"] = pos_warning
    return Trajectory(times=times, states=states, metadata=meta)


# ---------------------------------------------------------------------------
# spectra

@dataclass(frozen=True)
class CrossingRecord:
    """Degeneracy of two levels of the undriven spectrum at coupling g_star.

    parity_allowed marks pairs with even k difference; the drive conserves
    mechanical parity, so only those can anticross under driving.
    """

    k1: int
    n1: int
    k2: int
    n2: int
    g_star: float
    dn: int
    parity_allowed: bool


def spectrum_sweep(p_base, g_values, k_max, n_max):
    """Analytic level table E_{k,n}(g) plus the level crossings in range.

    Returns (rows, crossings); rows are (g, k, n, E) ordered by g, n, k.
    Crossings between levels of equal photon number cannot occur (their
    separation is k-proportional and never vanishes for g >= 0).
    """
    g_values = np.asarray(g_values, dtype=float)
    rows = []
    for g in g_values:
        pg = replace(p_base, g=float(g))
        for n in range(n_max + 1):
            for k in range(k_max + 1):
                rows.append((float(g), k, n, model.eigenvalue(k, n, pg)))

    labels = [(k, n) for n in range(n_max + 1) for k in range(k_max + 1)]

    def diff(k1, n1, k2, n2):
        def f(g):
            pg = replace(p_base, g=g)
            return model.eigenvalue(k1, n1, pg) - model.eigenvalue(k2, n2, pg)
        return f

    crossings = []
    g_lo, g_hi = float(g_values.min()), float(g_values.max())
    scan = np.linspace(g_lo, g_hi, max(len(g_values), 200))
    for i, (k1, n1) in enumerate(labels):
        for (k2, n2) in labels[i + 1:]:
            if n1 == n2:
                continue
            f = diff(k1, n1, k2, n2)
            vals = [f(g) for g in scan]
            for j in range(len(scan) - 1):
                if vals[j] == 0.0 and scan[j] > g_lo:
                    g_star = float(scan[j])
                elif vals[j] * vals[j + 1] < 0.0:
                    g_star = float(brentq(f, scan[j], scan[j + 1], xtol=1e-6))
                else:
                    continue
                if g_star <= g_lo + 1e-12:
                    continue  # degeneracies pinned at the sweep edge
                crossings.append(CrossingRecord(
                    k1=k1, n1=n1, k2=k2, n2=n2, g_star=g_star,
                    dn=abs(n1 - n2), parity_allowed=((k1 - k2) % 2 == 0)))
    crossings.sort(key=lambda c: c.g_star)
    return rows, crossings


# ---------------------------------------------------------------------------
# Floquet spectrum

def fold(e, omega_d):
    """Quasi-energy representative in [0, omega_d)."""
    return np.mod(e, omega_d)


def circular_distance(x, y, omega_d):
    d = np.mod(x - y, omega_d)
    return np.minimum(d, omega_d - d)


def rotating_quasienergies(p, spec):
    """Method (a): eigenvalues of the time-independent rotating-frame H.

    Returns (unfolded, folded) arrays, both ascending in the unfolded order.
    """
    H = model.build_H_rotating(p, spec)
    w = np.linalg.eigvalsh(H)
    return w, fold(w, p.omega_d)


def _lab_hamiltonian(p, spec, t):
    H = model.build_H_Q(p, spec)
    if p.E != 0.0:
        a = hilbert.tensor(hilbert.identity(spec.n_mech),
                           hilbert.destroy(spec.n_cav), spec)
        H = H + 1j * p.E * (a.conj().T * np.exp(-1j * p.omega_d * t)
                            - a * np.exp(1j * p.omega_d * t))
    return H


def stroboscopic_quasienergies(p, spec, n_steps=2000, degeneracy_tol=1e-9):
    """Method (b): quasi-energies from the one-period lab-frame propagator.

    The propagator is built with a 4th-order commutator-free Magnus
    scheme (two exponentials per step, Gauss nodes).  Returns
    (folded quasi-energies sorted ascending, degenerate_flag).
    """
    if p.omega_d <= 0:
        raise ValueError("stroboscopic method needs omega_d > 0")
    if p.E < 0:
        raise ValueError("need E >= 0")
    T = 2.0 * math.pi / p.omega_d
    hstep = T / n_steps
    c1 = 0.5 - math.sqrt(3.0) / 6.0
    c2 = 0.5 + math.sqrt(3.0) / 6.0
    a1 = 0.25 + math.sqrt(3.0) / 6.0
    a2 = 0.25 - math.sqrt(3.0) / 6.0
    U = np.eye(spec.dim, dtype=complex)
    for i in range(n_steps):
        t0 = i * hstep
        H1 = _lab_hamiltonian(p, spec, t0 + c1 * hstep)
        H2 = _lab_hamiltonian(p, spec, t0 + c2 * hstep)
        U = hilbert.expm(-1j * hstep * (a2 * H1 + a1 * H2)) \
            @ hilbert.expm(-1j * hstep * (a1 * H1 + a2 * H2)) @ U
    lam = np.linalg.eigvals(U)
    eps = fold(-np.angle(lam) / T, p.omega_d)
    eps = np.sort(eps)
    degenerate = bool(np.any(np.diff(eps) < degeneracy_tol))
    return eps, degenerate


def floquet_method_agreement(p, spec, n_steps=2000):
    """Max circular distance between methods (a) and (b), modulo omega_d."""
    _, folded_a = rotating_quasienergies(p, spec)
    folded_b, degenerate = stroboscopic_quasienergies(p, spec, n_steps=n_steps)
    dev = 0.0
    for e in folded_a:
        dev = max(dev, float(circular_distance(e, folded_b, p.omega_d).min()))
    return dev, degenerate


@dataclass(frozen=True)
class GapRecord:
    """Minimum driven level separation near an undriven crossing."""

    crossing: CrossingRecord
    min_gap: float
    g_at_min: float


def undriven_rotating_crossings(p_base, g_values, k_max, n_max):
    """Crossings of the rotating-frame spectrum (photon energy Delta).

    Driving opens gaps at degeneracies of the rotating-frame Hamiltonian;
    these sit where E_{k,n} with omega0 -> Delta cross.
    """
    p_rot = replace(p_base, omega0=p_base.detuning(), E=0.0)
    _, crossings = spectrum_sweep(p_rot, g_values, k_max, n_max)
    return crossings


def mech_parity_signs(spec):
    """Diagonal of (-1)^(b'b) on the composite space (mech-major ordering)."""
    k = np.repeat(np.arange(spec.n_mech), spec.n_cav)
    return (-1.0) ** k


def driven_gap(p_base, spec, crossing, g):
    """Separation of the two driven levels tracked from a crossing pair at g.

    The drive conserves mechanical parity exactly, so each level is
    tracked inside its own parity sector; that keeps the identification
    stable even when the drive mixes photon sectors strongly.  For a
    parity-allowed pair the two levels repel inside one sector; for a
    blocked pair they belong to different sectors and cross exactly.
    """
    pg = replace(p_base, g=float(g))
    s1 = model.dressed_state(crossing.k1, crossing.n1, pg, spec)
    s2 = model.dressed_state(crossing.k2, crossing.n2, pg, spec)
    H = model.build_H_rotating(pg, spec)
    w, V = np.linalg.eigh(H)
    P = mech_parity_signs(spec)
    pv = np.real(np.einsum("ij,i,ij->j", V.conj(), P, V))
    even1 = crossing.k1 % 2 == 0
    m1 = pv > 0 if even1 else pv < 0
    if crossing.parity_allowed:
        weight = (np.abs(V.conj().T @ s1) ** 2
                  + np.abs(V.conj().T @ s2) ** 2) * m1
        i1, i2 = np.argsort(weight)[-2:]
    else:
        i1 = np.argmax(np.abs(V.conj().T @ s1) ** 2 * m1)
        i2 = np.argmax(np.abs(V.conj().T @ s2) ** 2 * ~m1)
    return abs(w[i1] - w[i2])


def driven_gap_report(p_base, spec, crossings, window=0.04, n_scan=17):
    """Minimum driven gap in a g-window around each undriven crossing.

    Scans the window, then refines the minimum with a bounded scalar search.
    """
    records = []
    for c in crossings:
        lo, hi = c.g_star - window, c.g_star + window
        lo = max(lo, 1e-6)
        gs = np.linspace(lo, hi, n_scan)
        gaps = [driven_gap(p_base, spec, c, g) for g in gs]
        j = int(np.argmin(gaps))
        blo = gs[max(0, j - 1)]
        bhi = gs[min(n_scan - 1, j + 1)]
        res = minimize_scalar(lambda g: driven_gap(p_base, spec, c, g),
                              bounds=(blo, bhi), method="bounded",
                              options={"xatol": 1e-8})
        if res.fun < gaps[j]:
            records.append(GapRecord(crossing=c, min_gap=float(res.fun),
                                     g_at_min=float(res.x)))
        else:
            records.append(GapRecord(crossing=c, min_gap=float(gaps[j]),
                                     g_at_min=float(gs[j])))
    return records
