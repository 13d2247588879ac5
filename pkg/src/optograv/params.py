"""Physical inputs and every derived Hamiltonian coefficient, with exact g-derivatives.

The vertically oriented cavity maps onto a driven oscillator with a
gravity-softened mechanical frequency, a shifted equilibrium length and a
correspondingly corrected single-photon coupling.  This module derives all of
those coefficients from raw SI inputs, together with the exact chain-rule
derivatives with respect to the gravitational acceleration g that every
Fisher-information computation downstream consumes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .constants import G_NEWTON, G_STANDARD, HBAR, M_EARTH, R_EARTH
from .errors import ConfigError, FrequencyImaginary, NonPositiveInput

# Warn when the cavity is no longer short compared to the Earth distance.
LONG_CAVITY_RATIO = 1e-3


def finite_difference_step(g: float) -> float:
    """Relative central-difference step in g, balancing truncation and round-off."""
    return max(1e-6 * abs(g), 1e-9)


@dataclass(frozen=True)
class PhysicalParams:
    """Raw experimental inputs in SI units.

    Parameters
    ----------
    m : float
        Movable-mirror mass (kg).
    omega : float
        Bare mechanical angular frequency (rad/s).
    omega_c : float
        Cavity optical angular frequency (rad/s).
    L0 : float
        Horizontal-cavity equilibrium length (m).
    g : float
        Gravitational acceleration to be estimated (m/s^2).
    R : float
        Distance from the lower mirror to the Earth center (m).
    alpha : complex
        Intracavity coherent amplitude; mean photon number is |alpha|^2.
    nbar : float
        Mean thermal phonon occupation of the mirror (dimensionless, >= 0).
    runs : int
        Number of repeated measurements M.
    first_order : bool
        Keep only the linear gravitational potential: forces the R -> infinity
        limit and freezes the cavity length at L0, so the quadratic phase
        coefficient has exactly zero g-derivative.
    """

    m: float
    omega: float
    omega_c: float
    L0: float
    g: float = G_STANDARD
    R: float = R_EARTH
    alpha: complex = 1.0 + 0.0j
    nbar: float = 0.0
    runs: int = 1
    hbar: float = HBAR
    G: float = G_NEWTON
    M_earth: float = M_EARTH
    first_order: bool = False

    def __post_init__(self):
        for name in ("m", "omega", "omega_c", "L0", "R", "hbar", "G", "M_earth"):
            if not getattr(self, name) > 0.0:
                raise NonPositiveInput(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.nbar < 0.0:
            raise NonPositiveInput(f"nbar must be >= 0, got {self.nbar!r}")
        if int(self.runs) < 1:
            raise NonPositiveInput(f"runs must be >= 1, got {self.runs!r}")
        if not self.first_order and self.omega**2 <= 2.0 * self.g / self.R:
            raise FrequencyImaginary(
                f"omega^2 = {self.omega**2:.6g} <= 2 g / R = {2 * self.g / self.R:.6g}; "
                "the effective mechanical frequency is not real"
            )
        if self.L0 / self.R > LONG_CAVITY_RATIO:
            warnings.warn(
                f"L0/R = {self.L0 / self.R:.3g} exceeds {LONG_CAVITY_RATIO}; "
                "the short-cavity approximation is questionable",
                stacklevel=2,
            )

    @property
    def n_photons(self) -> float:
        return abs(self.alpha) ** 2

    def with_g(self, g: float) -> "PhysicalParams":
        return replace(self, g=g)

    def to_dict(self) -> dict:
        d = {
            "m": self.m,
            "omega": self.omega,
            "omega_c": self.omega_c,
            "L0": self.L0,
            "g": self.g,
            "R": self.R,
            "alpha": [self.alpha.real, self.alpha.imag],
            "nbar": self.nbar,
            "runs": self.runs,
            "hbar": self.hbar,
            "G": self.G,
            "M_earth": self.M_earth,
        }
        if self.first_order:
            d["first_order"] = True
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalParams":
        """Build from a JSON-style dict; unknown keys are rejected."""
        allowed = {
            "m", "omega", "omega_c", "L0", "g", "R", "alpha", "nbar", "runs",
            "hbar", "G", "M_earth", "first_order",
        }
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "alpha" in kwargs:
            kwargs["alpha"] = _parse_amplitude(kwargs["alpha"])
        if "runs" in kwargs:
            kwargs["runs"] = int(kwargs["runs"])
        return cls(**kwargs)


def _parse_amplitude(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, complex):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"alpha must be a number or [re, im] pair, got {value!r}")


class GradientQuantities(NamedTuple):
    """Exact g-derivatives and the closed first-order approximations."""

    dk2_dg: float       # d(k~^2)/dg, exact chain rule
    dkS_dg: float       # d(k~ S~)/dg, exact chain rule
    A: float            # closed approximation of 2*pi*dk2_dg
    B: float            # closed approximation of 4*pi*dkS_dg


@dataclass(frozen=True)
class DerivedQuantities:
    """Hamiltonian coefficients of the gravity-modified cavity and their g-derivatives.

    ``k_tilde`` and ``S_tilde`` are the dimensionless per-photon coupling and
    gravitational shift that control every phase the field picks up; ``A`` and
    ``B`` are the closed first-order approximations of ``2*pi*dk2_dg`` and
    ``4*pi*dkS_dg``.  Instances are immutable values; ``with_g`` produces the
    member of the same one-parameter family at a different g (re-derivation for
    SI-backed instances, linear response for scaled ones).
    """

    omega_tilde: float  # gravity-softened mechanical angular frequency (rad/s)
    L: float            # vertical equilibrium cavity length (m)
    g0: float           # horizontal-cavity coupling (rad/s)
    g_tilde0: float     # vertical-cavity corrected coupling (rad/s)
    k_tilde: float      # g_tilde0 / omega_tilde
    S_tilde: float      # gravitational displacement shift / omega_tilde
    tau: float          # mechanical period 2*pi/omega_tilde (s)
    dk2_dg: float
    dkS_dg: float
    dS2_dg: float       # d(S~^2)/dg; a Fock-index-independent (global) phase rate
    A: float
    B: float
    g: float
    params: PhysicalParams | None = field(default=None, compare=False)

    @property
    def exact_gradients(self) -> tuple[float, float]:
        """(2*pi*dk2_dg, 4*pi*dkS_dg): exact coefficients for the closed QFI."""
        return (2.0 * math.pi * self.dk2_dg, 4.0 * math.pi * self.dkS_dg)

    @property
    def approx_gradients(self) -> tuple[float, float]:
        """The closed first-order (A, B) coefficients."""
        return (self.A, self.B)

    @property
    def position_scale(self) -> float:
        """sqrt(2 hbar / m omega); unit scale when no SI backing is present."""
        if self.params is not None:
            return math.sqrt(2.0 * self.params.hbar / (self.params.m * self.params.omega))
        return math.sqrt(2.0 / self.omega_tilde)

    @property
    def momentum_scale(self) -> float:
        """sqrt(2 hbar m omega); unit scale when no SI backing is present."""
        if self.params is not None:
            return math.sqrt(2.0 * self.params.hbar * self.params.m * self.params.omega)
        return math.sqrt(2.0 * self.omega_tilde)

    def with_g(self, g: float) -> "DerivedQuantities":
        if self.params is not None:
            return derive_quantities(self.params.with_g(g))
        # Scaled family: k~^2 and k~ S~ respond linearly with the stored rates.
        dg = g - self.g
        k2 = self.k_tilde**2 + self.dk2_dg * dg
        kS = self.k_tilde * self.S_tilde + self.dkS_dg * dg
        if k2 < 0.0:
            raise NonPositiveInput(f"k_tilde^2 extrapolates negative at g = {g!r}")
        k_new = math.sqrt(k2)
        S_new = kS / k_new if k_new > 0.0 else self.S_tilde
        return replace(
            self,
            k_tilde=k_new,
            S_tilde=S_new,
            g_tilde0=k_new * self.omega_tilde,
            dS2_dg=_scaled_dS2(k_new, S_new, self.dk2_dg, self.dkS_dg),
            g=g,
        )


def _scaled_dS2(k, S, dk2, dkS):
    # S~ = (k~ S~)/k~, so dS~/dg = dkS/k~ - S~ dk2/(2 k~^2); global phase rate only.
    if k == 0.0:
        return 0.0
    dS_dg = dkS / k - S * dk2 / (2.0 * k**2)
    return 2.0 * S * dS_dg


def derive_quantities(p: PhysicalParams) -> DerivedQuantities:
    """Derive every Hamiltonian coefficient and its exact g-derivative.

    The corrected coupling uses the defining expression
    (omega_c / L) * sqrt(hbar / (2 m omega_tilde)) with the shifted equilibrium
    length L = L0 + (g/omega^2)(1 - 2 G M / (omega^2 R^3)); to first order this
    equals g0 * (1 - G M / (R^2 L0 omega^2)).  Derivatives are exact chain
    rules through omega_tilde(g), L(g), the coupling and the shift, which is
    what makes the closed (A, B) coefficients first-order consistent with
    them.
    """
    GM = p.G * p.M_earth
    if p.first_order:
        omega_tilde = p.omega
        L = p.L0
        dL_dg = 0.0
        dwt_dg = 0.0
    else:
        omega_tilde = math.sqrt(p.omega**2 - 2.0 * p.g / p.R)
        dL_dg = (1.0 - 2.0 * GM / (p.omega**2 * p.R**3)) / p.omega**2
        L = p.L0 + p.g * dL_dg
        dwt_dg = -1.0 / (p.R * omega_tilde)
    if L <= 0.0:
        raise NonPositiveInput(f"equilibrium length is not positive: L = {L!r}")

    g0 = (p.omega_c / p.L0) * math.sqrt(p.hbar / (2.0 * p.m * p.omega))
    g_tilde0 = (p.omega_c / L) * math.sqrt(p.hbar / (2.0 * p.m * omega_tilde))
    k = g_tilde0 / omega_tilde
    S = p.m * p.g * math.sqrt(1.0 / (2.0 * p.m * omega_tilde * p.hbar))
    St = S / omega_tilde
    tau = 2.0 * math.pi / omega_tilde

    # Exact chain rule.
    dgt0_dg = g_tilde0 * (-dL_dg / L - 0.5 * dwt_dg / omega_tilde)
    dk_dg = k * (dgt0_dg / g_tilde0 - dwt_dg / omega_tilde)
    dk2_dg = 2.0 * k * dk_dg
    dS_dg = math.sqrt(p.m / (2.0 * omega_tilde * p.hbar)) * (
        1.0 - 0.5 * p.g * dwt_dg / omega_tilde
    )
    dSt_dg = dS_dg / omega_tilde - S * dwt_dg / omega_tilde**2
    dkS_dg = dk_dg * St + k * dSt_dg
    dS2_dg = 2.0 * St * dSt_dg

    # Closed first-order coefficients (horizontal-cavity coupling, bare omega).
    if p.first_order:
        A = 0.0
        B = 2.0 * math.pi * (g0 * p.m / p.omega**2) * math.sqrt(2.0 / (p.hbar * p.m * p.omega))
    else:
        A = -4.0 * math.pi * g0**2 / (p.omega**4 * p.L0)
        B = (
            2.0 * math.pi
            * (g0 * p.m / p.omega**2)
            * math.sqrt(2.0 / (p.hbar * p.m * p.omega))
            * (1.0 - 2.0 * p.g / (p.omega**2 * p.L0))
        )

    return DerivedQuantities(
        omega_tilde=omega_tilde,
        L=L,
        g0=g0,
        g_tilde0=g_tilde0,
        k_tilde=k,
        S_tilde=St,
        tau=tau,
        dk2_dg=dk2_dg,
        dkS_dg=dkS_dg,
        dS2_dg=dS2_dg,
        A=A,
        B=B,
        g=p.g,
        params=p,
    )


def gradient_quantities(p: PhysicalParams) -> GradientQuantities:
    """Exact derivatives of k~^2 and k~ S~ plus the closed (A, B) approximations."""
    d = derive_quantities(p)
    return GradientQuantities(dk2_dg=d.dk2_dg, dkS_dg=d.dkS_dg, A=d.A, B=d.B)


def scaled_quantities(
    k_tilde: float,
    S_tilde: float,
    omega_tilde: float = 1.0,
    g: float = G_STANDARD,
    dk2_dg: float = 0.0,
    dkS_dg: float = 0.0,
) -> DerivedQuantities:
    """Dimensionless test-bench family: set k~, S~ directly, bypassing SI inputs.

    Realistic SI parameters give per-photon phases around 1e-12, far too small
    for interference-level numerics, so oracle comparisons run on this scaled
    family instead.  ``dk2_dg`` and ``dkS_dg`` define the (linear) response of
    k~^2 and k~ S~ to g, making the family usable for Fisher-information and
    likelihood work.
    """
    if k_tilde < 0.0 or omega_tilde <= 0.0:
        raise NonPositiveInput("k_tilde must be >= 0 and omega_tilde > 0")
    return DerivedQuantities(
        omega_tilde=omega_tilde,
        L=math.nan,
        g0=k_tilde * omega_tilde,
        g_tilde0=k_tilde * omega_tilde,
        k_tilde=k_tilde,
        S_tilde=S_tilde,
        tau=2.0 * math.pi / omega_tilde,
        dk2_dg=dk2_dg,
        dkS_dg=dkS_dg,
        dS2_dg=_scaled_dS2(k_tilde, S_tilde, dk2_dg, dkS_dg),
        A=2.0 * math.pi * dk2_dg,
        B=4.0 * math.pi * dkS_dg,
        g=g,
        params=None,
    )
