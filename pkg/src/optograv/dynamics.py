"""Closed-form evolution of the cavity-mirror system and a dense-matrix oracle.

The interaction displaces the mirror conditionally on the photon number, so an
initial coherent pair evolves into a sum of number branches, each attached to
its own mirror coherent state.  After every mechanical period the branches
re-merge, the mirror decouples, and the field is left with a quadratic-in-n
phase that carries all the information about g.  Everything here is a pure
function of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import DimensionTooLarge, NonPositiveInput, TruncationInsufficient
from .params import DerivedQuantities

# Probability mass allowed beyond the Fock cutoff.
TRUNCATION_EPS = 1e-12
# Hard cap on production Fock cutoffs; states this large are out of scope.
FOCK_CAP = 4096
# Hard cap on the dense-oracle Hilbert-space dimension.
ORACLE_DIM_CAP = 3_200_000


def fock_cutoff(n_photons: float, eps: float = TRUNCATION_EPS, cap: int = FOCK_CAP) -> int:
    """Cutoff from Poisson concentration: N + 10 sqrt(N) + 20, tail-verified."""
    if n_photons < 0.0:
        raise NonPositiveInput(f"mean photon number must be >= 0, got {n_photons!r}")
    n_max = int(math.ceil(n_photons + 10.0 * math.sqrt(n_photons) + 20.0))
    if n_max > cap:
        raise TruncationInsufficient(
            f"cutoff rule needs n_max = {n_max} > cap = {cap} for N = {n_photons:.3g}"
        )
    tail = float(poisson.sf(n_max, n_photons)) if n_photons > 0 else 0.0
    if tail > eps:
        raise TruncationInsufficient(
            f"Poisson tail mass {tail:.3g} beyond n_max = {n_max} exceeds {eps:.1g}"
        )
    return n_max


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    """Fock amplitudes e^{-|a|^2/2} a^n / sqrt(n!) up to ``n_max``, stably."""
    n = np.arange(n_max + 1)
    mod = abs(alpha)
    if mod == 0.0:
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mod = -0.5 * mod**2 + n * math.log(mod) - 0.5 * gammaln(n + 1)
    return np.exp(log_mod + 1j * n * np.angle(alpha))


def _tail_mass(alpha: complex, n_max: int) -> float:
    n_photons = abs(alpha) ** 2
    return float(poisson.sf(n_max, n_photons)) if n_photons > 0 else 0.0


@dataclass(frozen=True)
class FieldState:
    """Truncated Fock-amplitude vector of the cavity field (pure state)."""

    amplitudes: np.ndarray
    n_max: int
    norm_deficit: float

    def __post_init__(self):
        self.amplitudes.setflags(write=False)

    @property
    def n_photons(self) -> float:
        n = np.arange(self.n_max + 1)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "amplitudes": _interleave(self.amplitudes),
            "norm_deficit": self.norm_deficit,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FieldState":
        return cls(
            amplitudes=_deinterleave(data["amplitudes"]),
            n_max=int(data["n_max"]),
            norm_deficit=float(data["norm_deficit"]),
        )


@dataclass(frozen=True)
class JointState:
    """Branch decomposition of the joint field-mirror state.

    Branch n carries the field Fock component |n> with complex weight
    ``coefficients[n]`` and the mirror coherent state ``gammas[n]``.
    """

    coefficients: np.ndarray
    gammas: np.ndarray
    n_max: int
    time: float

    def __post_init__(self):
        self.coefficients.setflags(write=False)
        self.gammas.setflags(write=False)


@dataclass(frozen=True)
class FieldDensityMatrix:
    """Reduced field density matrix for a thermal-mirror input."""

    rho: np.ndarray
    nbar: float
    time: float
    n_max: int

    def __post_init__(self):
        self.rho.setflags(write=False)

    @property
    def trace_deficit(self) -> float:
        return 1.0 - float(np.real(np.trace(self.rho)))

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "nbar": self.nbar,
            "time": self.time,
            "rho": _interleave(self.rho.ravel()),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FieldDensityMatrix":
        n_max = int(data["n_max"])
        rho = _deinterleave(data["rho"]).reshape(n_max + 1, n_max + 1)
        return cls(rho=rho, nbar=float(data["nbar"]), time=float(data["time"]), n_max=n_max)


@dataclass(frozen=True)
class PhaseSpacePoint:
    """Mean mirror position (m) and momentum (kg m/s)."""

    x: float
    p: float


def _interleave(z: np.ndarray) -> list:
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out.tolist()


def _deinterleave(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr[0::2] + 1j * arr[1::2]


def joint_state(
    d: DerivedQuantities,
    alpha: complex,
    beta: complex,
    t: float,
    n_max: int | None = None,
    eps: float = TRUNCATION_EPS,
) -> JointState:
    """Joint state after time t: number branches with displaced mirror states.

    Branch n has weight
    coh_n * exp(i (k n + S)^2 (wt - sin wt)) * exp(i (k n + S)(Re(b) sin wt + Im(b)(1 - cos wt)))
    and mirror amplitude gamma_n = b e^{-i wt} + (k n + S)(1 - e^{-i wt}),
    writing k, S, w for k_tilde, S_tilde, omega_tilde and b for beta.
    """
    if t < 0.0:
        raise NonPositiveInput(f"time must be >= 0, got {t!r}")
    if n_max is None:
        n_max = fock_cutoff(abs(alpha) ** 2, eps=eps)
    deficit = _tail_mass(alpha, n_max)
    if deficit > eps:
        raise TruncationInsufficient(
            f"field tail mass {deficit:.3g} beyond n_max = {n_max} exceeds {eps:.1g}"
        )
    n = np.arange(n_max + 1)
    wt = d.omega_tilde * t
    loop = wt - math.sin(wt)
    drive = beta.real * math.sin(wt) + beta.imag * (1.0 - math.cos(wt))
    shift = d.k_tilde * n + d.S_tilde
    coeff = coherent_amplitudes(alpha, n_max) * np.exp(1j * (shift**2 * loop + shift * drive))
    gamma = beta * np.exp(-1j * wt) + shift * (1.0 - np.exp(-1j * wt))
    return JointState(coefficients=coeff, gammas=gamma, n_max=n_max, time=t)


def field_state_at_period(
    d: DerivedQuantities,
    alpha: complex,
    n_max: int | None = None,
    eps: float = TRUNCATION_EPS,
) -> FieldState:
    """Field state after one mechanical period, the mirror having decoupled.

    The amplitude moduli are the input Poisson weights; the phases
    theta_n = 2 pi (k^2 n^2 + 2 k S n + S^2) carry all the g-dependence.  The
    global S^2 term is kept so overlaps and density matrices stay consistent.
    """
    if n_max is None:
        n_max = fock_cutoff(abs(alpha) ** 2, eps=eps)
    deficit = _tail_mass(alpha, n_max)
    if deficit > eps:
        raise TruncationInsufficient(
            f"field tail mass {deficit:.3g} beyond n_max = {n_max} exceeds {eps:.1g}"
        )
    n = np.arange(n_max + 1)
    theta = 2.0 * math.pi * (
        d.k_tilde**2 * n**2 + 2.0 * d.k_tilde * d.S_tilde * n + d.S_tilde**2
    )
    amps = coherent_amplitudes(alpha, n_max) * np.exp(1j * theta)
    return FieldState(amplitudes=amps, n_max=n_max, norm_deficit=deficit)


def phase_periods(d: DerivedQuantities, n: np.ndarray) -> np.ndarray:
    """Per-period field phases theta_n for Fock indices ``n``."""
    return 2.0 * math.pi * (
        d.k_tilde**2 * n**2 + 2.0 * d.k_tilde * d.S_tilde * n + d.S_tilde**2
    )


def phase_derivatives(d: DerivedQuantities, n: np.ndarray) -> np.ndarray:
    """d theta_n / dg, exact: 2 pi (dk2 n^2 + 2 dkS n + dS2)."""
    return 2.0 * math.pi * (d.dk2_dg * n**2 + 2.0 * d.dkS_dg * n + d.dS2_dg)


def phase_space_trajectory(
    d: DerivedQuantities,
    beta: complex,
    n_photons: float,
    t_grid: Sequence[float],
) -> list[PhaseSpacePoint]:
    """Mean mirror position/momentum along the conditional-displacement loop.

    Prefactors use the bare-frequency zero-point scales sqrt(2 hbar / m omega)
    and sqrt(2 hbar m omega); the oscillatory arguments run at the modified
    frequency.  For scaled (dimensionless) inputs unit scales are used.
    """
    if n_photons < 0.0:
        raise NonPositiveInput(f"mean photon number must be >= 0, got {n_photons!r}")
    xs = d.position_scale
    ps = d.momentum_scale
    shift = d.k_tilde * n_photons + d.S_tilde
    points = []
    for t in t_grid:
        wt = d.omega_tilde * t
        c, s = math.cos(wt), math.sin(wt)
        x = xs * (beta.real * c + beta.imag * s + shift * (1.0 - c))
        p = ps * (beta.imag * c - beta.real * s + shift * s)
        points.append(PhaseSpacePoint(x=x, p=p))
    return points


def field_density_matrix_thermal(
    d: DerivedQuantities,
    alpha: complex,
    nbar: float,
    t: float,
    n_max: int | None = None,
    eps: float = TRUNCATION_EPS,
) -> FieldDensityMatrix:
    """Reduced field density matrix for a thermal mirror of occupation nbar.

    rho_nm = a_n a_m^* e^{i (k^2 (n^2 - m^2) + 2 k S (n - m)) (wt - sin wt)}
             e^{-k^2 (n - m)^2 (1 - cos wt) (2 nbar + 1)}.
    The damping factor is 1 at every full mechanical period, so there the
    matrix is independent of the initial thermal occupation.
    """
    if nbar < 0.0:
        raise NonPositiveInput(f"nbar must be >= 0, got {nbar!r}")
    if n_max is None:
        n_max = fock_cutoff(abs(alpha) ** 2, eps=eps)
    deficit = _tail_mass(alpha, n_max)
    if deficit > eps:
        raise TruncationInsufficient(
            f"field tail mass {deficit:.3g} beyond n_max = {n_max} exceeds {eps:.1g}"
        )
    n = np.arange(n_max + 1)
    wt = d.omega_tilde * t
    loop = wt - math.sin(wt)
    a = coherent_amplitudes(alpha, n_max)
    dn = n[:, None] - n[None, :]
    sq = n[:, None] ** 2 - n[None, :] ** 2
    phases = np.exp(1j * (d.k_tilde**2 * sq + 2.0 * d.k_tilde * d.S_tilde * dn) * loop)
    damping = np.exp(-d.k_tilde**2 * dn**2 * (1.0 - math.cos(wt)) * (2.0 * nbar + 1.0))
    rho = np.outer(a, np.conj(a)) * phases * damping
    return FieldDensityMatrix(rho=rho, nbar=nbar, time=t, n_max=n_max)


def mean_field(d: DerivedQuantities, alpha: complex, nbar: float, t: float) -> complex:
    """Mean cavity-field amplitude <a> at time t for a thermal mirror.

    Thermal noise only shrinks the modulus through the first factor, and that
    factor is exactly 1 at every full mechanical period; the phase
    (2 k S + k^2)(wt - sin wt) plus the Kerr-like collapse term carries g.
    """
    if nbar < 0.0:
        raise NonPositiveInput(f"nbar must be >= 0, got {nbar!r}")
    n_photons = abs(alpha) ** 2
    k2 = d.k_tilde**2
    wt = d.omega_tilde * t
    loop = wt - math.sin(wt)
    thermal = math.exp(-k2 * (1.0 - math.cos(wt)) * (2.0 * nbar + 1.0))
    collapse = math.exp(-n_photons * (1.0 - math.cos(2.0 * k2 * loop)))
    phase = (2.0 * d.k_tilde * d.S_tilde + k2) * loop + n_photons * math.sin(2.0 * k2 * loop)
    return alpha * thermal * collapse * complex(math.cos(phase), math.sin(phase))


# ---------------------------------------------------------------------------
# Dense-matrix oracle: independent of the closed-form solution above.

@dataclass(frozen=True)
class HamiltonianSpec:
    """Rotating-frame Hamiltonian coefficients for the dense oracle."""

    k_tilde: float
    S_tilde: float
    omega_tilde: float

    @classmethod
    def from_derived(cls, d: DerivedQuantities) -> "HamiltonianSpec":
        return cls(k_tilde=d.k_tilde, S_tilde=d.S_tilde, omega_tilde=d.omega_tilde)


@dataclass(frozen=True)
class JointStateVector:
    """State vector on the truncated field x mirror product basis."""

    vector: np.ndarray  # shape (n_f + 1, n_m + 1)
    n_f: int
    n_m: int
    time: float

    def __post_init__(self):
        self.vector.setflags(write=False)


def brute_force_evolution(
    h: HamiltonianSpec,
    alpha: complex,
    beta: complex,
    t: float,
    n_f: int,
    n_m: int,
    eps: float = TRUNCATION_EPS,
    dim_cap: int = ORACLE_DIM_CAP,
) -> JointStateVector:
    """Evolve coherent x coherent inputs by dense Hamiltonian exponentiation.

    Builds the rotating-frame Hamiltonian
    w b'b - w (k n + S)(b' + b) on the full (n_f+1)(n_m+1) product basis and
    applies exp(-i H t) through a dense eigendecomposition.  Desk-scale oracle
    for validating the closed-form evolution; not a production path.
    """
    dim = (n_f + 1) * (n_m + 1)
    if dim > dim_cap:
        raise DimensionTooLarge(f"product dimension {dim} exceeds cap {dim_cap}")
    for label, amp, cut in (("field", alpha, n_f), ("mirror", beta, n_m)):
        tail = _tail_mass(amp, cut)
        if tail > eps:
            raise TruncationInsufficient(
                f"input {label} coherent tail {tail:.3g} beyond cutoff {cut} exceeds {eps:.1g}"
            )
    nf = np.arange(n_f + 1)
    j = np.arange(n_m + 1)
    lower = np.diag(np.sqrt(j[1:]), k=1)          # mirror annihilation
    quad = lower + lower.T                         # b' + b
    number_m = np.diag(j).astype(float)
    id_m = np.eye(n_m + 1)
    shift = h.k_tilde * nf + h.S_tilde
    H = h.omega_tilde * (
        np.kron(np.eye(n_f + 1), number_m)
        - np.kron(np.diag(shift), quad)
    )
    psi0 = np.kron(coherent_amplitudes(alpha, n_f), coherent_amplitudes(beta, n_m))
    w, V = np.linalg.eigh(H)
    psi_t = V @ (np.exp(-1j * w * t) * (V.conj().T @ psi0))
    return JointStateVector(
        vector=psi_t.reshape(n_f + 1, n_m + 1), n_f=n_f, n_m=n_m, time=t
    )


def closed_form_overlap(closed: JointState, brute: JointStateVector) -> float:
    """|<closed|brute>| between the branch decomposition and the dense vector."""
    n_common = min(closed.n_max, brute.n_f)
    total = 0.0 + 0.0j
    for n in range(n_common + 1):
        mirror = coherent_amplitudes(complex(closed.gammas[n]), brute.n_m)
        total += np.conj(closed.coefficients[n]) * np.vdot(mirror, brute.vector[n])
    return abs(total)


def oracle_mirror_cutoff(
    h: HamiltonianSpec,
    alpha: complex,
    beta: complex,
    times: Sequence[float],
    n_f: int,
    budget: float = 1e-9,
) -> int:
    """Mirror cutoff so branch-weighted tail mass stays below ``budget``.

    Branch n of the evolved state holds a mirror coherent state of modulus at
    most |beta| + 2 (k n + S); sizes the cutoff so that the Poisson tails,
    weighted by the branch probabilities, sum below the budget.
    """
    n_photons = abs(alpha) ** 2
    eta_max = max(abs(1.0 - np.exp(-1j * h.omega_tilde * t)) for t in times)
    n_m = 8
    for n in range(n_f + 1):
        p_n = float(poisson.pmf(n, n_photons)) if n_photons > 0 else (1.0 if n == 0 else 0.0)
        if p_n < 1e-16:
            continue
        mean = (abs(beta) + (h.k_tilde * n + h.S_tilde) * eta_max) ** 2
        allowed = min(1.0, budget / max(p_n, 1e-300))
        if allowed >= 1.0:
            continue
        n_m = max(n_m, int(poisson.isf(allowed, mean)) + 2)
    return n_m
