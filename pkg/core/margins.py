# core/margins.py
"""
Margins F split into a lower part U (mass 1 - 1/ell) and an upper tail V
(mass 1/ell), with the conditional moments the limit theory needs.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.stats import norm

from config import QUAD_LIMIT, QUAD_MAX_RESIDUAL, QUAD_TOLERANCE
from core.exceptions import MarginError, QuadratureError

logger = logging.getLogger(__name__)

PartSampler = Callable[[np.random.Generator, int], np.ndarray]

CLOSED_FORM_TOLERANCE = 1e-12
QUADRATURE_TOLERANCE = 1e-8


def _check_ell(ell: int) -> int:
    if isinstance(ell, bool) or not isinstance(ell, (int, np.integer)) or ell < 2:
        raise MarginError(f"ell must be an integer >= 2, got {ell!r}")
    return int(ell)


def _close(a: float, b: float, tolerance: float) -> bool:
    return abs(a - b) <= tolerance * max(1.0, abs(a), abs(b))


@dataclass(frozen=True, eq=False)
class MarginSpec:
    """
    Split of a margin F: X is drawn from sample_V when its edge indicator is 1
    and from sample_U otherwise. Samplers take (rng, size) and return arrays.
    """

    ell: int
    sample_U: PartSampler
    sample_V: PartSampler
    mu_U: float
    sigma2_U: float
    mu_V: float
    sigma2_V: float
    mu: float
    sigma2: float
    cdf_F: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "custom"
    tolerance: float = field(default=CLOSED_FORM_TOLERANCE, repr=False)

    def __post_init__(self):
        _check_ell(self.ell)
        if not all(math.isfinite(v) for v in (self.mu_U, self.sigma2_U, self.mu_V,
                                              self.sigma2_V, self.mu, self.sigma2)):
            raise MarginError(f"Margin '{self.label}' has non-finite moments (infinite variance?)")
        if self.sigma2 <= 0:
            raise MarginError(f"Margin '{self.label}' is degenerate: sigma2 = {self.sigma2}")
        if self.sigma2_U < 0 or self.sigma2_V < 0:
            raise MarginError(f"Margin '{self.label}' has a negative conditional variance")

        w = 1.0 / self.ell
        mean_mix = (1 - w) * self.mu_U + w * self.mu_V
        if not _close(self.mu, mean_mix, self.tolerance):
            raise MarginError(f"Mean decomposition violated for '{self.label}': "
                              f"{self.mu} vs {mean_mix}")
        var_mix = ((1 - w) * self.sigma2_U + w * self.sigma2_V
                   + w * (1 - w) * (self.mu_U - self.mu_V) ** 2)
        if not _close(self.sigma2, var_mix, self.tolerance):
            raise MarginError(f"Variance decomposition violated for '{self.label}': "
                              f"{self.sigma2} vs {var_mix}")
        r = mixing_coefficient(self)
        logger.debug(f"Margin '{self.label}' (ell={self.ell}) built with r={r:.6f}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def r(self) -> float:
        return mixing_coefficient(self)

    def sample_mixture(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """X = V with probability 1/ell, U otherwise; its law is F"""
        upper = rng.random(size) < 1.0 / self.ell
        values = np.empty(size)
        values[upper] = self.sample_V(rng, int(upper.sum()))
        values[~upper] = self.sample_U(rng, int((~upper).sum()))
        return values

    def part_sum(self, rng: np.random.Generator, count_U: int, count_V: int) -> float:
        """Sum of count_U fresh U draws and count_V fresh V draws"""
        total = 0.0
        if count_U:
            total += count_U * self.mu_U if self.sigma2_U == 0 else float(self.sample_U(rng, count_U).sum())
        if count_V:
            total += count_V * self.mu_V if self.sigma2_V == 0 else float(self.sample_V(rng, count_V).sum())
        return total

    def describe(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "ell": self.ell,
            "mu_U": self.mu_U,
            "sigma2_U": self.sigma2_U,
            "mu_V": self.mu_V,
            "sigma2_V": self.sigma2_V,
            "mu": self.mu,
            "sigma2": self.sigma2,
            "r": self.r,
        }


def mixing_coefficient(spec: MarginSpec) -> float:
    """r = sqrt(w (1 - w)) (mu_V - mu_U) / sigma with w = 1/ell"""
    if spec.sigma2 <= 0:
        raise MarginError("Mixing coefficient is undefined for a degenerate margin (sigma = 0)")
    w = 1.0 / spec.ell
    r = math.sqrt(w * (1 - w)) * (spec.mu_V - spec.mu_U) / math.sqrt(spec.sigma2)
    if abs(r) > 1 + 1e-9:
        raise MarginError(f"Mixing coefficient {r} lies outside [-1, 1]")
    return max(-1.0, min(1.0, r))


def margin_bernoulli(ell: int = 2) -> MarginSpec:
    """Bernoulli(1/ell) with A = {1}: U is the atom at 0, V the atom at 1"""
    ell = _check_ell(ell)
    w = 1.0 / ell

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, np.where(x < 1, 1 - w, 1.0))

    return MarginSpec(
        ell=ell,
        sample_U=lambda rng, size: np.zeros(size),
        sample_V=lambda rng, size: np.ones(size),
        mu_U=0.0, sigma2_U=0.0, mu_V=1.0, sigma2_V=0.0,
        mu=w, sigma2=w * (1 - w),
        cdf_F=cdf,
        label="bernoulli" if ell == 2 else f"bernoulli(1/{ell})",
    )


def margin_bernoulli_half() -> MarginSpec:
    return margin_bernoulli(2)


def margin_uniform01(ell: int = 2) -> MarginSpec:
    """Uniform(0,1) split at t = 1 - 1/ell"""
    ell = _check_ell(ell)
    t = 1.0 - 1.0 / ell
    return MarginSpec(
        ell=ell,
        sample_U=lambda rng, size: t * rng.random(size),
        sample_V=lambda rng, size: t + (1 - t) * rng.random(size),
        mu_U=t / 2, sigma2_U=t * t / 12,
        mu_V=(1 + t) / 2, sigma2_V=(1 - t) ** 2 / 12,
        mu=0.5, sigma2=1.0 / 12,
        cdf_F=lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0),
        label="uniform01",
    )


def margin_std_normal(ell: int = 2) -> MarginSpec:
    """Standard normal split at its (1 - 1/ell)-quantile z; truncated-normal moments"""
    ell = _check_ell(ell)
    t = 1.0 - 1.0 / ell
    z = norm.ppf(t)
    density = norm.pdf(z)
    mu_V = density / (1 - t)
    mu_U = -density / t
    sigma2_V = 1 + z * mu_V - mu_V ** 2
    sigma2_U = 1 + z * mu_U - mu_U ** 2
    return MarginSpec(
        ell=ell,
        # 1 - random() lies in (0, 1], keeping both tails finite
        sample_U=lambda rng, size: norm.ppf(t * (1 - rng.random(size))),
        sample_V=lambda rng, size: norm.isf((1 - t) * (1 - rng.random(size))),
        mu_U=float(mu_U), sigma2_U=float(sigma2_U),
        mu_V=float(mu_V), sigma2_V=float(sigma2_V),
        mu=0.0, sigma2=1.0,
        cdf_F=norm.cdf,
        label="normal",
    )


@dataclass(frozen=True)
class QuadratureConfig:
    epsabs: float = QUAD_TOLERANCE
    epsrel: float = 1e-10
    limit: int = QUAD_LIMIT
    max_residual: float = QUAD_MAX_RESIDUAL


def _vectorize(quantile_fn: Callable) -> Callable[[np.ndarray], np.ndarray]:
    scalar = np.vectorize(quantile_fn, otypes=[float])

    def evaluate(p):
        p = np.asarray(p, dtype=float)
        try:
            values = np.asarray(quantile_fn(p), dtype=float)
            if values.shape == p.shape:
                return values
        except (TypeError, ValueError):
            pass
        return scalar(p)

    return evaluate


def _integrate(fn: Callable[[float], float], lo: float, hi: float,
               cfg: QuadratureConfig, what: str) -> float:
    value, abserr = integrate.quad(fn, lo, hi, epsabs=cfg.epsabs, epsrel=cfg.epsrel, limit=cfg.limit)
    if not math.isfinite(value):
        raise MarginError(f"Integral of {what} over ({lo}, {hi}) is not finite (variance overflow)")
    if abserr > cfg.max_residual:
        raise QuadratureError(f"Quadrature for {what} over ({lo}, {hi}) did not converge", abserr)
    logger.debug(f"quad {what} on ({lo:.6g}, {hi:.6g}) = {value:.12g} (err {abserr:.2e})")
    return value


def margin_custom(quantile_fn: Callable[[float], float], ell: int,
                  moment_quadrature_cfg: Optional[QuadratureConfig] = None,
                  cdf_fn: Optional[Callable] = None, label: str = "custom") -> MarginSpec:
    """
    Margin from a quantile function Q with A fixed as the upper tail above
    Q(1 - 1/ell). Conditional moments come from adaptive quadrature of Q over
    (0, t) and (t, 1); an atom straddling t is rejected.
    """
    ell = _check_ell(ell)
    cfg = moment_quadrature_cfg or QuadratureConfig()
    t = 1.0 - 1.0 / ell

    def q(p):
        return float(quantile_fn(p))

    try:
        mu_U = _integrate(q, 0.0, t, cfg, "Q") / t
        mu_V = _integrate(q, t, 1.0, cfg, "Q") / (1 - t)
        mu = t * mu_U + (1 - t) * mu_V
        sigma2_U = _integrate(lambda p: (q(p) - mu_U) ** 2, 0.0, t, cfg, "(Q - mu_U)^2") / t
        sigma2_V = _integrate(lambda p: (q(p) - mu_V) ** 2, t, 1.0, cfg, "(Q - mu_V)^2") / (1 - t)
        sigma2 = (_integrate(lambda p: (q(p) - mu) ** 2, 0.0, t, cfg, "(Q - mu)^2")
                  + _integrate(lambda p: (q(p) - mu) ** 2, t, 1.0, cfg, "(Q - mu)^2"))
    except OverflowError as e:
        raise MarginError(f"Variance overflow while integrating the quantile function: {e}")

    if sigma2 <= 0 or not math.isfinite(sigma2):
        raise MarginError(f"Margin '{label}' is degenerate or has infinite variance (sigma2 = {sigma2})")

    gap = 1e-9
    if q(t - gap) == q(t + gap):
        raise MarginError(f"Margin '{label}' has an atom at its {t:.6g}-quantile; "
                          "the tail set would not carry mass exactly 1/ell. Split the atom manually.")

    evaluate = _vectorize(quantile_fn)
    return MarginSpec(
        ell=ell,
        sample_U=lambda rng, size: evaluate(t * (1 - rng.random(size))),
        sample_V=lambda rng, size: evaluate(t + (1 - t) * (1 - rng.random(size))),
        mu_U=mu_U, sigma2_U=max(sigma2_U, 0.0), mu_V=mu_V, sigma2_V=max(sigma2_V, 0.0),
        mu=mu, sigma2=sigma2,
        cdf_F=cdf_fn,
        label=label,
        tolerance=QUADRATURE_TOLERANCE,
    )


def margin_from_quantile_table(table: Sequence[Sequence[float]], ell: int,
                               moment_quadrature_cfg: Optional[QuadratureConfig] = None) -> MarginSpec:
    """Margin whose quantile function interpolates [[p, x], ...] monotonically (PCHIP)"""
    array = np.asarray(table, dtype=float)
    if array.ndim != 2 or array.shape[1] != 2 or len(array) < 2:
        raise MarginError("quantile_table must be a list of at least two [p, x] pairs")
    p, x = array[:, 0], array[:, 1]
    if np.any(np.diff(p) <= 0):
        raise MarginError("quantile_table probabilities must be strictly increasing")
    if p[0] != 0.0 or p[-1] != 1.0:
        raise MarginError("quantile_table must span p = 0 to p = 1")
    if np.any(np.diff(x) < 0):
        raise MarginError("quantile_table values must be non-decreasing")
    interpolant = PchipInterpolator(p, x, extrapolate=False)
    cfg = moment_quadrature_cfg or QuadratureConfig(limit=max(QUAD_LIMIT, 4 * len(p)))
    return margin_custom(interpolant, ell, cfg, label="quantile-table")


MARGIN_BUILDERS: Dict[str, Callable[[int], MarginSpec]] = {
    "bernoulli": margin_bernoulli,
    "uniform01": margin_uniform01,
    "normal": margin_std_normal,
}


def margin_by_name(name: str, ell: int = 2) -> MarginSpec:
    key = name.strip().lower()
    if key not in MARGIN_BUILDERS:
        raise MarginError(f"Unknown margin '{name}'. Expected one of: {', '.join(MARGIN_BUILDERS)}")
    return MARGIN_BUILDERS[key](ell)


def margin_from_config(payload: Dict[str, Any]) -> MarginSpec:
    """JSON margin: {"name": ..., "ell": k} or {"quantile_table": [[p, x], ...], "ell": k}"""
    if "ell" not in payload:
        raise MarginError("Margin config requires 'ell'")
    if "quantile_table" in payload:
        return margin_from_quantile_table(payload["quantile_table"], payload["ell"])
    if "name" in payload:
        return margin_by_name(payload["name"], payload["ell"])
    raise MarginError("Margin config needs either 'name' or 'quantile_table'")
