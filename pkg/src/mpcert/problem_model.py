"""Problem data: radial potentials, nonlinearities, and structural checks.

The solver certifies solutions of

    -div(grad u) + V(|x|) u = f(|x|, u)   on R^N, N >= 3,

for potentials that may vanish (or decay) at infinity. Everything downstream
(penalization, energy bounds, thresholds) consumes the `ProblemSpec` defined
here, and `check_hypotheses` decides whether a spec enters the certified
regime at all.

Tail infima such as inf_{r>=R} r^e V(r) are computed from per-family
monotonicity facts (each potential family declares where its weighted tail
becomes monotone), with dense sampling only as a last-resort fallback that
emits a warning.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.special import gammaln

__all__ = [
    "HypothesisViolation",
    "Potential",
    "ConstantPotential",
    "InversePowerPotential",
    "GaussianWellPotential",
    "QuadraticWellPotential",
    "ExpDecayPotential",
    "Modulation",
    "Nonlinearity",
    "PowerNonlinearity",
    "ExpThresholdNonlinearity",
    "ProblemSpec",
    "HypothesisReport",
    "sobolev_constant",
    "sphere_area",
    "ball_volume",
    "omega_stats",
    "check_hypotheses",
    "growth_constant_near_zero",
    "ar_defect_constant",
]


class HypothesisViolation(ValueError):
    """A structural hypothesis fails badly enough that a constant is undefined."""


# ---------------------------------------------------------------------------
# dimension-dependent constants
# ---------------------------------------------------------------------------


def critical_exponent(dim: int) -> float:
    """Critical Sobolev exponent 2N/(N-2)."""
    if dim < 3:
        raise ValueError(f"dimension must be >= 3, got {dim}")
    return 2.0 * dim / (dim - 2.0)


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere in R^N: 2 pi^(N/2) / Gamma(N/2)."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return 2.0 * math.pi ** (dim / 2.0) / math.exp(gammaln(dim / 2.0))


def ball_volume(dim: int, radius: float) -> float:
    """Lebesgue measure of the ball of given radius in R^N."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    return sphere_area(dim) * radius**dim / dim


def sobolev_constant(dim: int) -> float:
    """Best constant S in S |u|_{2*}^2 <= |grad u|_2^2 on D^{1,2}(R^N).

    Closed form N(N-2) pi (Gamma(N/2)/Gamma(N))^(2/N); the extremals are the
    radial profiles (1 + r^2)^(-(N-2)/2) up to scaling, which the test suite
    uses as an independent quadrature cross-check.
    """
    if dim < 3:
        raise ValueError(f"dimension must be >= 3, got {dim}")
    ratio = math.exp((gammaln(dim / 2.0) - gammaln(float(dim))) * 2.0 / dim)
    return dim * (dim - 2.0) * math.pi * ratio


# ---------------------------------------------------------------------------
# tail-weight bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailWeight:
    """Weight w(r) multiplying V(r) in a tail infimum.

    kind "power":  w(r) = r**exponent
    kind "exp":    w(r) = exp(mu * r**kappa)
    """

    kind: str
    exponent: float = 0.0
    mu: float = 0.0
    kappa: float = 1.0

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return r**self.exponent
        if self.kind == "exp":
            return np.exp(self.mu * r**self.kappa)
        raise ValueError(f"unknown weight kind {self.kind!r}")


@dataclass(frozen=True)
class TailInfo:
    """Monotonicity of w(r)V(r) for large r.

    kind "nondecreasing": the product is nondecreasing for r >= from_radius,
    so the infimum over [R, inf) is attained on [R, max(R, from_radius)].
    kind "limit": the product is eventually nonincreasing with the given
    limit; the infimum over a tail is min(sampled minimum, limit).
    kind "unknown": no structural fact; caller falls back to sampling.
    """

    kind: str
    from_radius: float = 0.0
    limit: Optional[float] = None


class Potential:
    """Radial potential base class. Subclasses are cheap frozen dataclasses."""

    def __call__(self, r):
        raise NotImplementedError

    def tail_info(self, weight: TailWeight) -> TailInfo:
        """Monotonicity of weight(r) * V(r) in the tail; see TailInfo."""
        return TailInfo("unknown")

    def describe(self) -> dict:
        d = {"family": type(self).__name__}
        d.update(self.__dict__ if not hasattr(self, "__dataclass_fields__") else {
            k: getattr(self, k) for k in self.__dataclass_fields__})
        return d


def _power_root(weight: TailWeight, slope_fn: Callable[[float], float],
                lo: float, hi: float) -> float:
    """Bisect slope_fn (increasing sign) for the monotonicity onset radius."""
    if slope_fn(lo) >= 0:
        return lo
    while slope_fn(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            return hi
    return optimize.brentq(slope_fn, lo, hi, xtol=1e-12, rtol=1e-12)


@dataclass(frozen=True)
class ConstantPotential(Potential):
    """V(r) = value."""

    value: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.full_like(r, self.value)

    def tail_info(self, weight: TailWeight) -> TailInfo:
        if self.value >= 0:
            return TailInfo("nondecreasing", 0.0)
        # negative constant: any growing weight drives the product to -inf
        return TailInfo("limit", 0.0, limit=-math.inf)


@dataclass(frozen=True)
class InversePowerPotential(Potential):
    """V(r) = amplitude / (1 + r)**decay with amplitude > 0, decay >= 0."""

    amplitude: float
    decay: float

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ValueError("amplitude must be > 0")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude / (1.0 + r) ** self.decay

    def tail_info(self, weight: TailWeight) -> TailInfo:
        if weight.kind == "power":
            e, g = weight.exponent, self.decay
            if e >= g:
                # d/dr [r^e (1+r)^-g] has sign e + (e - g) r >= 0
                return TailInfo("nondecreasing", 0.0)
            return TailInfo("limit", e / (g - e), limit=0.0)
        # exponential weight beats any power decay
        mu, k, g = weight.mu, weight.kappa, self.decay

        def slope(r: float) -> float:
            return mu * k * r ** (k - 1.0) * (1.0 + r) - g

        return TailInfo("nondecreasing", _power_root(weight, slope, 1e-9, 1.0))


@dataclass(frozen=True)
class GaussianWellPotential(Potential):
    """V(r) = level - depth * exp(-(r/width)^2): a sign-changing well when depth > level."""

    level: float
    depth: float
    width: float = 1.0

    def __post_init__(self):
        if self.level <= 0 or self.depth < 0 or self.width <= 0:
            raise ValueError("need level > 0, depth >= 0, width > 0")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.level - self.depth * np.exp(-((r / self.width) ** 2))

    def zero_radius(self) -> float:
        """Boundary of the negativity region (0 if V >= 0 everywhere)."""
        if self.depth <= self.level:
            return 0.0
        return self.width * math.sqrt(math.log(self.depth / self.level))

    def tail_info(self, weight: TailWeight) -> TailInfo:
        # V is strictly increasing in r and positive beyond zero_radius, and
        # both weight kinds are nondecreasing, so the product is nondecreasing
        # from there on.
        return TailInfo("nondecreasing", self.zero_radius())


@dataclass(frozen=True)
class QuadraticWellPotential(Potential):
    """V(r) = r^2 - depth (coercive well, used mainly in diagnostics)."""

    depth: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return r * r - self.depth

    def zero_radius(self) -> float:
        return math.sqrt(self.depth) if self.depth > 0 else 0.0

    def tail_info(self, weight: TailWeight) -> TailInfo:
        return TailInfo("nondecreasing", self.zero_radius())


@dataclass(frozen=True)
class ExpDecayPotential(Potential):
    """V(r) = amplitude * exp(-rate * r**power)."""

    amplitude: float
    rate: float
    power: float = 1.0

    def __post_init__(self):
        if self.amplitude <= 0 or self.rate < 0 or self.power <= 0:
            raise ValueError("need amplitude > 0, rate >= 0, power > 0")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-self.rate * r**self.power)

    def tail_info(self, weight: TailWeight) -> TailInfo:
        if self.rate == 0.0:
            return TailInfo("nondecreasing", 0.0)
        if weight.kind == "power":
            return TailInfo("limit", 1.0, limit=0.0)
        mu, k = weight.mu, weight.kappa
        nu, kv = self.rate, self.power
        if k > kv:

            def slope(r: float) -> float:
                return mu * k * r ** (k - 1.0) - nu * kv * r ** (kv - 1.0)

            return TailInfo("nondecreasing", _power_root(weight, slope, 1e-9, 1.0))
        if k == kv:
            if mu >= nu:
                return TailInfo("nondecreasing", 0.0)
            return TailInfo("limit", 0.0, limit=0.0)
        return TailInfo("limit", 1.0, limit=0.0)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Modulation:
    """Bounded positive radial factor w(r) = base + amp * cos(freq * r)."""

    base: float = 1.0
    amp: float = 0.0
    freq: float = 1.0

    def __post_init__(self):
        if self.base <= abs(self.amp):
            raise ValueError("need base > |amp| so the modulation stays positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.amp == 0.0:
            return np.full_like(r, self.base)
        return self.base + self.amp * np.cos(self.freq * r)

    @property
    def sup(self) -> float:
        return self.base + abs(self.amp)

    @property
    def inf(self) -> float:
        return self.base - abs(self.amp)


class Nonlinearity:
    """Source term f(r, s) = w(r) * phi(s), with phi(s) = 0 for s <= 0.

    `odd=True` problems use the odd reflection phi(-s) = -phi(s) instead.
    Subclasses provide the positive-part profile `phi`, its antiderivative
    `phi_antideriv`, and its derivative `phi_prime` (for Newton polish).
    """

    modulation: Modulation

    def phi(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def phi_antideriv(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def phi_prime(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- full evaluations ---------------------------------------------------

    def _signed(self, s, fn, odd: bool, even_output: bool):
        s = np.asarray(s, dtype=float)
        pos = fn(np.maximum(s, 0.0))
        if not odd:
            return np.where(s > 0, pos, 0.0)
        neg = fn(np.maximum(-s, 0.0))
        if even_output:
            return np.where(s >= 0, pos, neg)
        return np.where(s >= 0, pos, -neg)

    def value(self, r, s, odd: bool = False):
        """f(r, s); zero for s <= 0 unless odd, then odd in s."""
        return self.modulation(r) * self._signed(s, self.phi, odd, even_output=False)

    def antideriv(self, r, s, odd: bool = False):
        """F(r, s) = integral of f(r, .) from 0 to s; even in s when odd."""
        return self.modulation(r) * self._signed(
            s, self.phi_antideriv, odd, even_output=True)

    def derivative(self, r, s, odd: bool = False):
        """d f / d s; even in s when odd."""
        return self.modulation(r) * self._signed(s, self.phi_prime, odd, even_output=True)

    def describe(self) -> dict:
        d = {"family": type(self).__name__}
        d.update({k: getattr(self, k) for k in self.__dataclass_fields__})
        d["modulation"] = (self.modulation.base, self.modulation.amp,
                           self.modulation.freq)
        return d


@dataclass(frozen=True)
class PowerNonlinearity(Nonlinearity):
    """phi(s) = c1 s^(g1-1) + c2 s^(g2-1) on s >= 0 (c2 may be negative)."""

    c1: float
    g1: float
    c2: float = 0.0
    g2: float = 0.0
    modulation: Modulation = field(default_factory=Modulation)

    def __post_init__(self):
        if self.g1 <= 2.0:
            raise ValueError("need g1 > 2 (superquadratic primitive)")
        if self.c2 != 0.0 and self.g2 <= 2.0:
            raise ValueError("need g2 > 2 when c2 is nonzero")

    def phi(self, s):
        out = self.c1 * s ** (self.g1 - 1.0)
        if self.c2 != 0.0:
            out = out + self.c2 * s ** (self.g2 - 1.0)
        return out

    def phi_antideriv(self, s):
        out = self.c1 / self.g1 * s**self.g1
        if self.c2 != 0.0:
            out = out + self.c2 / self.g2 * s**self.g2
        return out

    def phi_prime(self, s):
        out = self.c1 * (self.g1 - 1.0) * s ** (self.g1 - 2.0)
        if self.c2 != 0.0:
            out = out + self.c2 * (self.g2 - 1.0) * s ** (self.g2 - 2.0)
        return out


# Gauss-Legendre rule mapped to [0, 1]; the exponential-family antiderivative
# integrand is smooth and flat at 0, so a fixed high-order rule reaches close
# to machine precision and stays fully vectorized.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)
_GL_X01 = 0.5 * (_GL_NODES + 1.0)
_GL_W01 = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class ExpThresholdNonlinearity(Nonlinearity):
    """phi(s) = c1 s^(p-1) exp(-a / s^q): flat to all orders at s = 0."""

    c1: float
    p: float
    a: float
    q: float
    modulation: Modulation = field(default_factory=Modulation)

    def __post_init__(self):
        if self.c1 <= 0 or self.p <= 2 or self.a <= 0 or self.q <= 0:
            raise ValueError("need c1 > 0, p > 2, a > 0, q > 0")

    def _damp(self, s):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s > 0, np.exp(-self.a / np.where(s > 0, s, 1.0) ** self.q), 0.0)

    def phi(self, s):
        return self.c1 * s ** (self.p - 1.0) * self._damp(s)

    def phi_antideriv(self, s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        pos = np.atleast_1d(np.maximum(s, 0.0)).astype(float)
        t = pos[..., None] * _GL_X01
        vals = self.phi(t)
        out = (vals * _GL_W01).sum(axis=-1) * pos
        out = out.reshape(np.atleast_1d(s).shape)
        return float(out[0]) if scalar else out

    def phi_prime(self, s):
        s = np.asarray(s, dtype=float)
        damp = self._damp(s)
        safe = np.where(s > 0, s, 1.0)
        with np.errstate(over="ignore"):
            core = (self.p - 1.0) * safe ** (self.p - 2.0) + \
                self.a * self.q * safe ** (self.p - 2.0 - self.q)
        return np.where((s > 0) & (damp > 0), self.c1 * core * damp, 0.0)


# ---------------------------------------------------------------------------
# the problem record
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    """Everything the pipeline needs to know about one problem instance.

    mode: "standard" (power-type smallness near zero, threshold scales with
    the splice radius), "exponential" (flat nonlinearity, exp-weighted tail
    condition), or "sweep" (a family of (radius, coefficient) pairs instead
    of a single claim).
    """

    dim: int
    potential: Potential
    nonlinearity: Nonlinearity
    q: float
    p: float
    theta: float
    a1: float
    a2: float = 0.0
    s0: float = 0.0
    splice_radius: float = 1.0
    lam: float = 1.0
    bump_radius: float = 0.5
    v_infty: float = 0.0
    odd: bool = False
    mode: str = "standard"
    a: float = 0.0
    mu: float = 0.0
    pairs: tuple = ()

    def __post_init__(self):
        if self.dim < 3 or int(self.dim) != self.dim:
            raise ValueError("dim must be an integer >= 3")
        two_star = critical_exponent(self.dim)
        if not 2.0 < self.p < two_star:
            raise ValueError(f"need 2 < p < {two_star}, got p={self.p}")
        if self.mode not in ("standard", "exponential", "sweep"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode in ("standard", "sweep") and self.q <= 2.0:
            raise ValueError("need q > 2 in standard/sweep mode")
        if self.mode == "exponential":
            if self.q <= 0:
                raise ValueError("need q > 0 in exponential mode")
            if self.a <= 0 or self.mu <= 0:
                raise ValueError("exponential mode needs a > 0 and mu > 0")
            if isinstance(self.nonlinearity, ExpThresholdNonlinearity) and \
                    (self.nonlinearity.a != self.a or self.nonlinearity.q != self.q):
                raise ValueError("nonlinearity (a, q) must match the spec fields")
        if self.theta <= 2.0:
            raise ValueError("need theta > 2")
        if self.a1 <= 0 or self.a2 < 0 or self.s0 < 0:
            raise ValueError("need a1 > 0, a2 >= 0, s0 >= 0")
        if not 0.0 < self.bump_radius < self.splice_radius:
            raise ValueError("need 0 < bump_radius < splice_radius")
        if self.lam <= 0:
            raise ValueError("need lam > 0")
        if self.v_infty < 0:
            raise ValueError("need v_infty >= 0")
        if self.mode == "sweep":
            if len(self.pairs) < 2:
                raise ValueError("sweep mode needs at least two (radius, coefficient) pairs")
            radii = [float(rj) for rj, _ in self.pairs]
            if any(b <= a for a, b in zip(radii, radii[1:])):
                raise ValueError("sweep radii must be strictly increasing")
            if any(rj <= self.bump_radius for rj in radii):
                raise ValueError("sweep radii must exceed bump_radius")
            if any(lj <= 0 for _, lj in self.pairs):
                raise ValueError("sweep coefficients must be positive")

    # -- convenience --------------------------------------------------------

    @property
    def two_star(self) -> float:
        return critical_exponent(self.dim)

    @property
    def tail_exponent(self) -> float:
        """Exponent (N-2)(q-2) in the power-weighted tail condition."""
        return (self.dim - 2.0) * (self.q - 2.0)

    @property
    def exp_tail_exponent(self) -> float:
        """Exponent (N-2)q in the exp-weighted tail condition."""
        return (self.dim - 2.0) * self.q

    def f(self, r, s):
        return self.nonlinearity.value(r, s, odd=self.odd)

    def F(self, r, s):
        return self.nonlinearity.antideriv(r, s, odd=self.odd)

    def f_prime(self, r, s):
        return self.nonlinearity.derivative(r, s, odd=self.odd)

    def V(self, r):
        return self.potential(r)


# ---------------------------------------------------------------------------
# scalar minimization helper
# ---------------------------------------------------------------------------


def _refined_min(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                 n: int = 2048, log: bool = False) -> tuple[float, float]:
    """Min of fn over [lo, hi]: dense scan plus a bounded local polish."""
    if hi <= lo:
        v = float(fn(np.asarray([lo]))[0])
        return v, lo
    if log and lo > 0:
        grid = np.geomspace(lo, hi, n)
    else:
        grid = np.linspace(lo, hi, n)
    vals = np.asarray(fn(grid), dtype=float)
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n - 1)]
    if b > a:
        res = optimize.minimize_scalar(
            lambda x: float(fn(np.asarray([x]))[0]),
            bounds=(a, b), method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(b))})
        if res.fun < vals[i]:
            return float(res.fun), float(res.x)
    return float(vals[i]), float(grid[i])


def _tail_infimum(pot: Potential, weight: TailWeight, start: float,
                  probe_max: float) -> tuple[float, bool]:
    """inf_{r >= start} weight(r) V(r); second value flags a sampling fallback."""

    def product(r: np.ndarray) -> np.ndarray:
        return weight(r) * pot(r)

    info = pot.tail_info(weight)
    if info.kind == "nondecreasing":
        hi = max(start, info.from_radius)
        val, _ = _refined_min(product, start, hi)
        return val, False
    if info.kind == "limit":
        hi = max(start, info.from_radius, probe_max)
        val, _ = _refined_min(product, start, hi)
        lim = info.limit if info.limit is not None else val
        return min(val, lim), False
    warnings.warn(
        "potential family declares no tail monotonicity; the tail infimum is "
        "sampled and may be optimistic", RuntimeWarning, stacklevel=2)
    val, _ = _refined_min(product, start, max(start * 4.0, probe_max))
    return val, True


# ---------------------------------------------------------------------------
# negativity region
# ---------------------------------------------------------------------------


def omega_stats(spec: ProblemSpec, probe_max: Optional[float] = None,
                n: int = 4096) -> tuple[float, float]:
    """(alpha, measure) of the negativity region of V.

    alpha = max(0, -inf V) and measure = |{V < 0}| in R^N, with the region
    boundaries located by bracketing and root refinement. Raises
    HypothesisViolation when the negativity region reaches the probe edge
    (unbounded region) so the structural hypothesis cannot hold.
    """
    if probe_max is None:
        probe_max = max(4.0 * spec.splice_radius, 16.0)
    grid = np.linspace(0.0, probe_max, n)
    vals = np.asarray(spec.V(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise HypothesisViolation("potential is not finite on the probe range")
    neg = vals < 0.0
    if not np.any(neg):
        return 0.0, 0.0
    if neg[-1]:
        raise HypothesisViolation(
            "potential still negative at the probe edge; negativity region "
            "must be bounded")

    pot = spec.V
    crossings: list[float] = []
    for i in range(n - 1):
        if (vals[i] < 0.0) != (vals[i + 1] < 0.0):
            root = optimize.brentq(lambda r: float(pot(np.asarray([r]))[0]),
                                   grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14)
            crossings.append(root)

    # assemble negative segments from the crossing list
    segments: list[tuple[float, float]] = []
    inside = vals[0] < 0.0
    left = 0.0
    for c in crossings:
        if inside:
            segments.append((left, c))
        inside = not inside
        left = c
    measure = sum(
        sphere_area(spec.dim) * (b**spec.dim - a**spec.dim) / spec.dim
        for a, b in segments)

    alpha = 0.0
    for a, b in segments:
        val, _ = _refined_min(pot, a, b, n=512)
        alpha = max(alpha, -val)
    return alpha, measure


# ---------------------------------------------------------------------------
# hypothesis report
# ---------------------------------------------------------------------------


@dataclass
class HypothesisReport:
    """Outcome of `check_hypotheses`: one entry per structural hypothesis."""

    f1_bound: float = math.nan
    f1_ok: bool = False
    f2_margin: float = math.nan
    f2_ok: bool = False
    f3_ok: bool = False
    f3_witness: Optional[tuple[float, float]] = None
    f4_ok: Optional[bool] = None
    fhat1_bound: Optional[float] = None
    fhat1_ok: Optional[bool] = None
    v1_ok: bool = False
    alpha: float = 0.0
    omega_measure: float = 0.0
    v1_margin: float = math.inf
    v2_inf: float = math.nan
    v2_ok: bool = False
    v3_inf: Optional[float] = None
    v3_ok: Optional[bool] = None
    v4_inf: Optional[float] = None
    v4_ok: Optional[bool] = None
    v6_inf: Optional[float] = None
    v6_ok: Optional[bool] = None
    sweep_ok: Optional[list[bool]] = None
    sampling_fallback: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        checks = [self.f1_ok, self.f2_ok, self.f3_ok, self.v1_ok, self.v2_ok]
        for opt in (self.f4_ok, self.fhat1_ok, self.v4_ok):
            if opt is not None:
                checks.append(opt)
        if self.sweep_ok is not None:
            checks.append(all(self.sweep_ok))
        return all(checks)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, float) and math.isnan(v):
                out[k] = None
            else:
                out[k] = v
        out["all_ok"] = self.all_ok
        return out


def _per_decade_maxima(s: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Max of vals within each decade of s (s positive ascending)."""
    decades = np.floor(np.log10(s)).astype(int)
    out = []
    for d in range(decades.min(), decades.max() + 1):
        mask = decades == d
        if np.any(mask):
            out.append(np.max(vals[mask]))
    return np.asarray(out)


def _diverges_toward_zero(s: np.ndarray, vals: np.ndarray,
                          factor: float = 3.0) -> bool:
    """True when per-decade maxima keep growing as s -> 0."""
    m = _per_decade_maxima(s, vals)
    if len(m) < 4:
        return False
    # m[0] is the smallest decade; growth toward zero means m decreasing in index
    head = m[:4]
    increasing = all(head[i] > head[i + 1] * (1.0 + 1e-9) for i in range(3))
    return increasing and head[0] > factor * head[3]


def check_hypotheses(spec: ProblemSpec, r_probe_max: Optional[float] = None,
                     s_probe_max: Optional[float] = None,
                     n: int = 4096) -> HypothesisReport:
    """Evaluate every structural hypothesis the certified regime needs.

    All probes are deterministic (geometric/linear grids plus local
    refinement); the report records margins so near-misses are visible.
    """
    rep = HypothesisReport()
    R = spec.splice_radius
    if r_probe_max is None:
        r_probe_max = max(4.0 * R, 16.0)
    if s_probe_max is None:
        s_probe_max = max(4.0, 2.0 * spec.s0)
    r_grid = np.linspace(0.0, r_probe_max, 257)

    # (f1): |s f(r,s)| / |s|^q bounded as s -> 0
    s_small = np.geomspace(1e-10, 1.0, 1024)
    ratios = np.empty_like(s_small)
    for i, si in enumerate(s_small):
        fv = np.abs(spec.f(r_grid, np.full_like(r_grid, si)))
        ratios[i] = np.max(fv) * si ** (1.0 - spec.q)
    rep.f1_bound = float(np.max(ratios[s_small <= 1e-9]))
    rep.f1_ok = bool(np.isfinite(rep.f1_bound)) and not _diverges_toward_zero(
        s_small, ratios)
    if not rep.f1_ok:
        rep.notes.append("near-zero bound |s f|/|s|^q grows without bound")

    # (f2): |f| <= a1 |s|^(p-1) + a2
    s_f2 = np.concatenate([np.geomspace(1e-10, s_probe_max, 512),
                           np.linspace(1e-3, s_probe_max, 512)])
    worst = math.inf
    for si in s_f2:
        fv = np.abs(spec.f(r_grid, np.full_like(r_grid, si)))
        slack = spec.a1 * si ** (spec.p - 1.0) + spec.a2 - np.max(fv)
        worst = min(worst, float(slack))
    rep.f2_margin = worst
    rep.f2_ok = worst >= -1e-9 * max(1.0, spec.a1 + spec.a2)
    if not rep.f2_ok:
        rep.notes.append("growth bound a1 |s|^(p-1) + a2 fails on the probe")

    # (f3): s f >= theta F > 0 for |s| >= max(s0, tiny)
    s_lo = max(spec.s0, 1e-8)
    s_f3 = np.geomspace(s_lo if spec.s0 > 0 else 1e-6, s_probe_max, 1024)
    if spec.s0 > 0:
        s_f3 = np.concatenate([[s_lo], s_f3])
    rep.f3_ok = True
    for si in s_f3:
        sv = np.full_like(r_grid, si)
        sf = si * np.asarray(spec.f(r_grid, sv), dtype=float)
        Fv = np.asarray(spec.F(r_grid, sv), dtype=float)
        bad = (sf - spec.theta * Fv < -1e-10 * np.maximum(np.abs(sf), 1.0)) | (Fv <= 0.0)
        if spec.mode == "exponential":
            # below the float floor exp(-a/s^q) vanishes exactly, so sf and F
            # both read 0 and the sample carries no information
            below_floor = si < (spec.a / 700.0) ** (1.0 / spec.q)
            bad = bad & ~((sf == 0.0) & (Fv == 0.0) & below_floor)
        if np.any(bad):
            j = int(np.argmax(bad))
            rep.f3_ok = False
            rep.f3_witness = (float(r_grid[j]), float(si))
            break
    if not rep.f3_ok:
        rep.notes.append("superlinearity s f >= theta F > 0 fails; see witness")

    # (f4): oddness, when requested
    if spec.odd:
        s_test = np.geomspace(1e-6, s_probe_max, 64)
        ok = True
        for si in s_test:
            sv = np.full_like(r_grid, si)
            diff = np.abs(spec.f(r_grid, sv) + spec.f(r_grid, -sv))
            scale = np.maximum(np.abs(spec.f(r_grid, sv)), 1e-300)
            ok = ok and bool(np.all(diff <= 1e-12 * scale))
        rep.f4_ok = ok
        if not ok:
            rep.notes.append("odd mode requested but f is not odd in s")

    # (fhat1): |f| exp(a/|s|^q) bounded as s -> 0 (exponential mode)
    if spec.mode == "exponential":
        # probe only where exp(-a/s^q) is representable; below that floor the
        # weighted product cannot be evaluated in floating point
        s_lo_hat = max(1e-4, (spec.a / 700.0) ** (1.0 / spec.q))
        s_h = np.geomspace(s_lo_hat, 1.0, 512)
        vals = np.empty_like(s_h)
        with np.errstate(over="ignore"):
            for i, si in enumerate(s_h):
                fv = np.max(np.abs(spec.f(r_grid, np.full_like(r_grid, si))))
                vals[i] = fv * math.exp(min(spec.a / si**spec.q, 709.0))
        rep.fhat1_bound = float(np.max(vals[:128]))
        rep.fhat1_ok = bool(np.all(np.isfinite(vals))) and not \
            _diverges_toward_zero(s_h, vals)
        if not rep.fhat1_ok:
            rep.notes.append("exp-weighted near-zero bound diverges")

    # (V1): structure of the potential
    v_on_probe = np.asarray(spec.V(np.linspace(0.0, r_probe_max, n)), dtype=float)
    if np.min(v_on_probe) >= -1e-14:
        # nonnegative potential: need the ceiling on the bump ball
        v_bump_sup, _ = _refined_min(lambda r: -np.asarray(spec.V(r)), 0.0,
                                     spec.bump_radius, n=1024)
        v_bump_sup = -v_bump_sup
        rep.alpha, rep.omega_measure = 0.0, 0.0
        rep.v1_margin = spec.v_infty - v_bump_sup
        rep.v1_ok = rep.v1_margin >= -1e-9 * max(1.0, spec.v_infty)
        if not rep.v1_ok:
            rep.notes.append(
                f"potential exceeds the declared bump ceiling: sup V on the bump "
                f"ball is {v_bump_sup:.6g} > v_infty = {spec.v_infty:.6g}")
    else:
        try:
            rep.alpha, rep.omega_measure = omega_stats(spec, probe_max=r_probe_max)
        except HypothesisViolation as exc:
            rep.v1_ok = False
            rep.v1_margin = -math.inf
            rep.notes.append(str(exc))
            rep.alpha, rep.omega_measure = math.inf, math.inf
        else:
            S = sobolev_constant(spec.dim)
            rep.v1_margin = S / rep.omega_measure ** (2.0 / spec.dim) - rep.alpha
            bump_ceiling, _ = _refined_min(lambda r: -np.asarray(spec.V(r)),
                                           0.0, spec.bump_radius, n=1024)
            bump_ceiling = -bump_ceiling
            ok = rep.v1_margin > 0.0
            if bump_ceiling > 1e-12:
                ok = False
                rep.notes.append(
                    "sign-changing potential must be <= 0 on the bump ball "
                    "(the bump sits inside the well)")
            rep.v1_ok = ok
            if rep.v1_margin <= 0.0:
                rep.notes.append("well too deep: alpha >= S / |Omega|^(2/N)")

    # (V2)/(V3)/(V4)/(V6)/sweep: weighted tail infima
    fallback = False
    if spec.mode in ("standard", "sweep"):
        w = TailWeight("power", exponent=spec.tail_exponent)
        rep.v2_inf, fb = _tail_infimum(spec.potential, w, R, r_probe_max)
        fallback = fallback or fb
        rep.v2_ok = rep.v2_inf >= spec.lam * (1.0 - 1e-12)
        rep.v3_inf = rep.v2_inf / R**spec.tail_exponent
        rep.v3_ok = rep.v3_inf >= spec.lam * (1.0 - 1e-12)
        if spec.mode == "sweep":
            rep.sweep_ok = []
            for rj, lj in spec.pairs:
                vj, fb = _tail_infimum(spec.potential, w, float(rj), r_probe_max)
                fallback = fallback or fb
                rep.sweep_ok.append(bool(vj >= float(lj) * (1.0 - 1e-12)))
            if not all(rep.sweep_ok):
                rep.notes.append("some sweep pairs fail their tail condition")
    else:
        kappa = spec.exp_tail_exponent
        w4 = TailWeight("exp", mu=spec.mu, kappa=kappa)
        rep.v4_inf, fb4 = _tail_infimum(spec.potential, w4, R, r_probe_max)
        rep.v4_ok = rep.v4_inf >= spec.lam * (1.0 - 1e-12)
        w6 = TailWeight("exp", mu=spec.mu / R**kappa, kappa=kappa)
        rep.v6_inf, fb6 = _tail_infimum(spec.potential, w6, R, r_probe_max)
        rep.v6_ok = rep.v6_inf >= spec.lam * (1.0 - 1e-12)
        fallback = fallback or fb4 or fb6
        # the power-weighted infimum is still reported for context
        w2 = TailWeight("power", exponent=(spec.dim - 2.0) * max(spec.q - 2.0, 0.0))
        rep.v2_inf, _ = _tail_infimum(spec.potential, w2, R, r_probe_max)
        rep.v2_ok = True
        if not rep.v4_ok:
            rep.notes.append("exp-weighted tail infimum below the claimed coefficient")
    rep.sampling_fallback = fallback
    return rep


# ---------------------------------------------------------------------------
# derived constants
# ---------------------------------------------------------------------------


def growth_constant_near_zero(spec: ProblemSpec, m_hat: float,
                              n: int = 4096) -> float:
    """Smallest probed C with |f(r, s)| <= C |s|^(q-1) for 0 < |s| <= m_hat.

    In exponential mode the comparison is |f| <= C exp(-a_eff/|s|^q) |s| with
    a_eff = a/2, so C = sup |f| exp(a_eff/|s|^q) / |s|. Raises
    HypothesisViolation when the supremum keeps growing on refinement
    (the requested comparison exponent is not admissible for this f).
    """
    if m_hat <= 0:
        raise ValueError("m_hat must be positive")
    w_sup = spec.nonlinearity.modulation.sup
    s = np.geomspace(m_hat * 1e-12, m_hat, n)
    phi = np.abs(np.asarray(spec.nonlinearity.phi(s), dtype=float))
    if spec.mode == "exponential":
        # log space avoids 0 * inf when phi underflows while the weight blows up
        a_eff = spec.a / 2.0
        with np.errstate(divide="ignore", over="ignore"):
            log_ratio = np.where(phi > 0.0, np.log(phi), -math.inf) \
                + a_eff / s**spec.q - np.log(s)
            vals = np.exp(log_ratio)
    else:
        vals = phi / s ** (spec.q - 1.0)
    vals = np.where(np.isfinite(vals), vals, math.inf)
    if not np.all(np.isfinite(vals)) or _diverges_toward_zero(s, vals):
        raise HypothesisViolation(
            "growth constant near zero diverges on refinement; the claimed "
            "comparison exponent q is not admissible for this nonlinearity")

    # local polish around the discrete argmax
    i = int(np.argmax(vals))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, n - 1)]

    def vals_at(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ph = np.abs(np.asarray(spec.nonlinearity.phi(x), dtype=float))
        if spec.mode == "exponential":
            with np.errstate(divide="ignore", over="ignore"):
                lr = np.where(ph > 0.0, np.log(ph), -math.inf) \
                    + spec.a / 2.0 / x**spec.q - np.log(x)
                return np.exp(lr)
        return ph / x ** (spec.q - 1.0)

    best = float(vals[i])
    if hi > lo:
        res = optimize.minimize_scalar(lambda x: -float(vals_at(np.asarray([x]))[0]),
                                       bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-14 * max(1.0, hi)})
        best = max(best, -float(res.fun))
    return w_sup * best


def ar_defect_constant(spec: ProblemSpec, delta: float = 0.1,
                       n: int = 1024) -> float:
    """Defect constant: sup of (F - s f / theta)+ for r <= R, |s| <= s0 (1+delta).

    Zero when s0 = 0, since the superlinearity inequality then holds for all s.
    """
    if spec.s0 == 0.0:
        return 0.0
    r_grid = np.linspace(0.0, spec.splice_radius, 257)
    s_grid = np.linspace(1e-12, spec.s0 * (1.0 + delta), n)
    worst = 0.0
    for si in s_grid:
        sv = np.full_like(r_grid, si)
        Fv = np.asarray(spec.F(r_grid, sv), dtype=float)
        sf = si * np.asarray(spec.f(r_grid, sv), dtype=float)
        worst = max(worst, float(np.max(Fv - sf / spec.theta)))
    return worst
