"""Market primitives, the price-to-rent ratio diffusion, and discounting quantities.

Price and rent are correlated geometric Brownian motions; the decision state is
their ratio X = P/R, which is itself a geometric diffusion. Everything downstream
(free boundary, comparative statics, simulation) consumes the reduced dynamics
plus the relocation-hazard discount factors defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from .errors import DegenerateDynamicsError, DivergentResaleError


@dataclass(frozen=True)
class DemandRegimeSpec:
    """Finite-state continuous-time Markov chain for the local demand shock.

    ``states`` are the shock levels M, ``switch_rates[i][j]`` the transition
    intensity from state i to state j (per year, off-diagonal; diagonals are
    ignored and implied by row sums). Simulation-only: the analytic threshold
    is not defined under regime switching.
    """

    states: Tuple[float, ...] = (-1.0, 1.0)
    switch_rates: Tuple[Tuple[float, ...], ...] = ((0.0, 0.5), (0.5, 0.0))
    initial_state: int = 0

    def __post_init__(self):
        n = len(self.states)
        if n == 0:
            raise ValueError("DemandRegimeSpec.states must be nonempty")
        if len(self.switch_rates) != n or any(len(row) != n for row in self.switch_rates):
            raise ValueError("DemandRegimeSpec.switch_rates must be an n x n matrix")
        for i, row in enumerate(self.switch_rates):
            for j, q in enumerate(row):
                if i != j and q < 0:
                    raise ValueError(f"switch_rates[{i}][{j}] must be >= 0")
        if not 0 <= self.initial_state < n:
            raise ValueError("DemandRegimeSpec.initial_state out of range")

    def exit_rate(self, i: int) -> float:
        """Total intensity of leaving state i."""
        return sum(q for j, q in enumerate(self.switch_rates[i]) if j != i)


@dataclass(frozen=True)
class MarketPrimitives:
    """Drifts, volatilities and correlation of price and rent, per year.

    ``alpha`` and ``beta`` are the rent- and price-drift loadings on the demand
    shock M; they default to 0 (extension off) and are only honored by the
    joint-path simulator.
    """

    mu_p: float
    sigma_p: float
    mu_r: float
    sigma_r: float
    rho: float
    alpha: float = 0.0
    beta: float = 0.0
    regime: Optional[DemandRegimeSpec] = None

    def __post_init__(self):
        if self.sigma_p < 0:
            raise ValueError("sigma_p must be >= 0")
        if self.sigma_r < 0:
            raise ValueError("sigma_r must be >= 0")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")


@dataclass(frozen=True)
class RatioDynamics:
    """Geometric-diffusion parameters of the price-to-rent ratio."""

    mu_x: float
    sigma_x: float

    def __post_init__(self):
        if self.sigma_x < 0:
            raise ValueError("sigma_x must be >= 0")


@dataclass(frozen=True)
class CharacteristicRoots:
    """Both roots of 0.5*sigma_x^2*g*(g-1) + mu_x*g - r = 0."""

    gamma_neg: float
    gamma_pos: float


def reduce_to_ratio(m: MarketPrimitives) -> RatioDynamics:
    """Ito reduction of correlated (P, R) dynamics to the ratio X = P/R.

    mu_x = mu_p - mu_r + sigma_r^2 - rho*sigma_p*sigma_r
    sigma_x = sqrt(sigma_p^2 + sigma_r^2 - 2*rho*sigma_p*sigma_r)

    Only defined without demand-shock loadings; the one-dimensional reduction
    does not exist under regime switching.
    """
    if m.alpha != 0.0 or m.beta != 0.0 or m.regime is not None:
        raise ValueError(
            "reduce_to_ratio requires alpha = beta = 0 and no regime spec; "
            "the 1-D reduction is undefined under regime switching"
        )
    mu_x = m.mu_p - m.mu_r + m.sigma_r**2 - m.rho * m.sigma_p * m.sigma_r
    var = m.sigma_p**2 + m.sigma_r**2 - 2.0 * m.rho * m.sigma_p * m.sigma_r
    # var can be a tiny negative number from rounding when rho = +/-1
    sigma_x = math.sqrt(max(var, 0.0))
    return RatioDynamics(mu_x=mu_x, sigma_x=sigma_x)


def characteristic_roots(d: RatioDynamics, r: float) -> CharacteristicRoots:
    """Solve 0.5*sigma_x^2*g*(g-1) + mu_x*g - r = 0 for both roots.

    Uses the cancellation-free quadratic formula: the larger-magnitude root is
    computed first, the other follows from the product relation
    gamma_pos * gamma_neg = -2r / sigma_x^2.
    """
    if r <= 0:
        raise ValueError("discount rate r must be > 0")
    if d.sigma_x == 0:
        raise DegenerateDynamicsError(
            "sigma_x = 0: deterministic ratio has no characteristic roots; "
            "use the simulator's deterministic hitting-time comparison instead"
        )
    a = 0.5 * d.sigma_x**2
    b = d.mu_x - 0.5 * d.sigma_x**2
    c = -r
    disc = b * b - 4.0 * a * c  # = b^2 + 2*sigma_x^2*r > 0
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    root1 = q / a
    root2 = c / q
    return CharacteristicRoots(gamma_neg=min(root1, root2), gamma_pos=max(root1, root2))


def characteristic_residual(d: RatioDynamics, r: float, gamma: float) -> float:
    """Back-substitution residual of a candidate root."""
    return 0.5 * d.sigma_x**2 * gamma * (gamma - 1.0) + d.mu_x * gamma - r


def expected_relocation_discount(lam: float, r: float) -> float:
    """E[exp(-r*T)] for T exponential with hazard lam: lam / (r + lam)."""
    if r <= 0:
        raise ValueError("discount rate r must be > 0")
    if lam < 0:
        raise ValueError("hazard lam must be >= 0")
    return lam / (r + lam)


def resale_multiplier(d: RatioDynamics, lam: float, r: float, mode: str = "paper_approx") -> float:
    """Expected discounted resale value per unit of current ratio.

    ``paper_approx`` holds the ratio constant at resale: lam / (r + lam).
    ``exact`` accounts for the drift of the geometric ratio until the
    exponential relocation time: lam / (r + lam - mu_x), requiring
    r + lam > mu_x.
    """
    if mode == "paper_approx":
        return expected_relocation_discount(lam, r)
    if mode == "exact":
        if r <= 0:
            raise ValueError("discount rate r must be > 0")
        if lam < 0:
            raise ValueError("hazard lam must be >= 0")
        if r + lam <= d.mu_x:
            raise DivergentResaleError(
                f"expected discounted resale diverges: r + lam = {r + lam} <= mu_x = {d.mu_x}"
            )
        return lam / (r + lam - d.mu_x)
    raise ValueError(f"unknown resale mode {mode!r}; expected 'paper_approx' or 'exact'")
