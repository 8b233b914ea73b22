"""Model physics: parameters, jump coefficient, reaction and reference-frame maps."""
from dataclasses import dataclass, field, asdict
import math

import numpy as np

from .assembly import CoefficientField
from .errors import ConfigError, HorizonError


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the bi-domain reaction-diffusion model.

    Attributes
    ----------
    d0, d1 : float
        Diffusion rates in the habitat (0) and outside it (1).
    r, a : float
        Logistic growth rate and competition coefficient in the habitat.
    m : float
        Mortality rate outside the habitat.
    alpha : float
        Probability of choosing the habitat at its edge, in (0, 1).
    c : tuple of float
        Shift velocity ``(c1, c2)``.
    robin_b : float, optional
        Robin coefficient at ``x = L`` for the strip geometry.
    d2, m2, beta : float, optional
        Far-side parameters from which ``robin_b`` can be derived.
    """

    d0: float = 1.0
    d1: float = 1.0
    r: float = 1.0
    a: float = 1.0
    m: float = 1.0
    alpha: float = 0.5
    c: tuple = (0.0, 0.0)
    robin_b: float = None
    d2: float = None
    m2: float = None
    beta: float = None

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if len(self.c) != 2:
            raise ConfigError("c must have two components")
        if not (self.d0 > 0 and self.d1 > 0):
            raise ConfigError(f"diffusion rates must be positive (d0={self.d0}, d1={self.d1})")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1) (got {self.alpha})")
        if not self.a > 0:
            raise ConfigError(f"a must be positive (got {self.a})")
        if self.m < 0:
            raise ConfigError(f"m must be nonnegative (got {self.m})")
        if self.beta is not None and not (0.0 < self.beta < 1.0):
            raise ConfigError(f"beta must lie in (0, 1) (got {self.beta})")

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return ModelParams(**d)


def kappa_from(alpha, d0, d1):
    """Jump coefficient ``alpha / (1 - alpha) * sqrt(d1 / d0)``."""
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must lie in (0, 1) (got {alpha})")
    if not (d0 > 0 and d1 > 0):
        raise ConfigError("diffusion rates must be positive")
    return alpha / (1.0 - alpha) * math.sqrt(d1 / d0)


def kappa(params):
    """Jump coefficient of ``params``: ``w0 = kappa * w1`` on the interface."""
    return kappa_from(params.alpha, params.d0, params.d1)


def reaction(u, subdomain, params):
    """``u (r - a u)`` in the habitat, ``-m u`` outside."""
    u = np.asarray(u, dtype=float)
    if subdomain == 0:
        return u * (params.r - params.a * u)
    return -params.m * u


def characteristic_roots(d, c, m):
    """Roots ``(n_minus, n_plus)`` of ``d n^2 + c n - m = 0``."""
    disc = math.sqrt(c * c + 4.0 * d * m)
    return (-c - disc) / (2.0 * d), (-c + disc) / (2.0 * d)


def tail_exponent(params):
    """Decay rate ``n+`` of the steady profile ``~ exp(n+ x)`` for ``x -> -inf``."""
    return characteristic_roots(params.d1, params.c[0], params.m)[1]


def robin_from_far_side(beta, d2, m2, c, d0=1.0):
    """Robin coefficient replacing a far-side region ``x > L``.

    The far side carries ``d2 w'' + c w' - m2 w = 0`` whose bounded steady
    solution is ``exp(n- (x - L))``.  Eliminating it through the density jump
    ``w = k2 w2`` (``k2 = beta / (1 - beta) * sqrt(d2 / d0)``) and flux
    continuity gives ``d0 w' + c w = b w`` with ``b = (d2 n- + c) / k2``.
    """
    n_minus, _ = characteristic_roots(d2, c, m2)
    k2 = kappa_from(beta, d0, d2)
    return (d2 * n_minus + c) / k2


def resolve_robin(params):
    """``params`` with ``robin_b`` filled from the far-side parameters if missing."""
    if params.robin_b is not None:
        return params
    if None in (params.beta, params.d2, params.m2):
        return params
    b = robin_from_far_side(params.beta, params.d2, params.m2, params.c[0], params.d0)
    return params.replace(robin_b=b)


@dataclass(frozen=True)
class AleMap:
    """Map from the moving physical frame to the fixed reference frame.

    ``kind`` is ``"identity"``, ``"linear_shift"`` (``xi = x - c t``) or
    ``"shrinking_rect"`` (``xi = x - c1 t``, ``eta = y Ly / (Ly - c2 t)``).
    """

    kind: str = "identity"
    c1: float = 0.0
    c2: float = 0.0
    Ly: float = 1.0
    Lx: float = 1.0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("identity", "linear_shift", "shrinking_rect"):
            raise ConfigError(f"unknown map kind {self.kind!r}")
        if self.kind == "shrinking_rect" and not (self.Ly > 0 and self.c2 > 0):
            raise ConfigError("shrinking_rect needs Ly > 0 and c2 > 0")

    @property
    def time_dependent(self):
        return self.kind == "shrinking_rect"

    @property
    def horizon(self):
        """Time at which the map degenerates (``inf`` if never)."""
        if self.kind == "shrinking_rect":
            return self.Ly / self.c2
        return math.inf

    def _check(self, t):
        if np.any(np.asarray(t) >= self.horizon):
            raise HorizonError(f"t = {t} is past the map horizon {self.horizon}")

    def eta_y(self, t):
        self._check(t)
        if self.kind == "shrinking_rect":
            return self.Ly / (self.Ly - self.c2 * t)
        return 1.0

    def jacobian(self, t):
        """Physical area per unit reference area."""
        return 1.0 / self.eta_y(t)

    def forward(self, x, y, t):
        """Physical ``(x, y)`` at time ``t`` to reference ``(xi, eta)``."""
        self._check(t)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "identity":
            return x.copy(), y.copy()
        if self.kind == "linear_shift":
            return x - self.c1 * t, y - self.c2 * t
        return x - self.c1 * t, y * self.eta_y(t)

    def inverse(self, xi, eta, t):
        """Reference ``(xi, eta)`` to physical ``(x, y)`` at time ``t``."""
        self._check(t)
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.kind == "identity":
            return xi.copy(), eta.copy()
        if self.kind == "linear_shift":
            return xi + self.c1 * t, eta + self.c2 * t
        return xi + self.c1 * t, eta / self.eta_y(t)

    def map_velocity(self, xi, eta, t):
        """``(xi_t, eta_t)`` at fixed physical point, in reference coordinates."""
        self._check(t)
        eta = np.asarray(eta, dtype=float)
        if self.kind == "identity":
            return np.zeros_like(eta), np.zeros_like(eta)
        if self.kind == "linear_shift":
            return np.full_like(eta, -self.c1), np.full_like(eta, -self.c2)
        return np.full_like(eta, -self.c1), eta * self.c2 / (self.Ly - self.c2 * t)


def ale_coefficients(ale, t, params, tau=None):
    """Coefficients of the reference-frame bilinear form at time ``t``.

    The reference-frame equation is ``w_t = div(D grad w) + c . grad w + G``
    with ``c = -(xi_t, eta_t)``; after integration by parts the form carries
    ``(c . grad v) w + (div c) w v``.

    Parameters
    ----------
    ale : AleMap
    t : float
    params : ModelParams
    tau : float, optional
        Time step; sets the mass factor ``1 / tau``.

    Raises
    ------
    HorizonError
        If ``t`` is at or past the map horizon.
    """
    ale._check(t)
    mass = 0.0 if tau is None else 1.0 / tau
    d0, d1 = params.d0, params.d1
    if ale.kind == "identity":
        return CoefficientField((d0 * np.eye(2), d1 * np.eye(2)), np.zeros(2), 0.0, mass,
                                params.robin_b, t)
    if ale.kind == "linear_shift":
        return CoefficientField((d0 * np.eye(2), d1 * np.eye(2)),
                                np.array([ale.c1, ale.c2], dtype=float), 0.0, mass,
                                params.robin_b, t)
    ey = ale.eta_y(t)
    rate = ale.c2 / (ale.Ly - ale.c2 * t)
    c1 = ale.c1

    def velocity(x, y):
        y = np.asarray(y, dtype=float)
        return np.stack([np.full_like(y, c1), -y * rate], axis=-1)

    return CoefficientField((np.diag([d0, d0 * ey ** 2]), np.diag([d1, d1 * ey ** 2])),
                            velocity, -rate, mass, params.robin_b, t)


def shift_map(params):
    """Linear-shift map with the velocity of ``params``."""
    return AleMap("linear_shift", params.c[0], params.c[1])
