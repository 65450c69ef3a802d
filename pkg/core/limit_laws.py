# core/limit_laws.py
"""
Limiting laws of the standardized counts and means: Gaussian, variance-gamma,
the composite bipartite limit and the two-hub scale mixture.

The variance-gamma family and the bipartite limit are Gaussian scale mixtures:
conditional on u ~ chi_k the law is N(0, a + b u^2). pdf and cdf are evaluated
from that representation with vector adaptive quadrature; cf_invert provides an
independent route through the characteristic function.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, special
from scipy.stats import chi, norm

from config import (CF_DECAY_PROBE, CF_DECAY_TOLERANCE, CF_MAX_RESIDUAL, MIXTURE_CHUNK,
                    PDF_NEGATIVE_TOLERANCE, QUAD_LIMIT)
from core.exceptions import CfInversionError, LimitLawError, QuadratureError

logger = logging.getLogger(__name__)

MIXTURE_EPSABS = 1e-12
MIXTURE_EPSREL = 1e-10


class LawKind(str, Enum):
    GAUSSIAN = "gaussian"
    VG = "vg"
    VG_STANDARDIZED = "vg_standardized"
    S_LIMIT = "s_limit_bipartite"
    MIXTURE_TWO_HUB = "mixture_two_hub"


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind for 2*nu a non-negative integer"""
    twice = 2 * float(nu)
    if twice < 0 or not math.isclose(twice, round(twice), abs_tol=1e-12):
        raise LimitLawError(f"bessel_k order must be a non-negative integer or half-integer, got {nu}")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise LimitLawError("bessel_k requires x > 0 (K_nu diverges at 0)")
    value = special.kv(round(twice) / 2, x)
    return float(value) if value.ndim == 0 else value


def _check_vg(alpha: float, theta: float, s: float):
    if not alpha > 0:
        raise LimitLawError(f"VG shape alpha must be positive, got {alpha}")
    if not s > 0:
        raise LimitLawError(f"VG scale s must be positive, got {s}")
    if theta != 0:
        raise LimitLawError("VG laws with theta != 0 are unsupported (the exponential tilt's "
                            "parameterization is ambiguous; only symmetric laws are implemented)")


def vg_pdf(alpha: float, theta: float, s: float, c: float, x):
    """
    VG(alpha, theta, s^2, c) density with theta = 0:
    f(x) = (|x - c| / 2s)^((alpha - 1)/2) K_{(alpha - 1)/2}(|x - c| / s) / (s sqrt(pi) Gamma(alpha/2)).
    At x = c the density is +inf for alpha <= 1.
    """
    _check_vg(alpha, theta, s)
    x = np.asarray(x, dtype=float)
    y = np.abs(x - c)
    nu = (alpha - 1) / 2
    log_norm = math.log(s) + 0.5 * math.log(math.pi) + special.gammaln(alpha / 2)
    out = np.empty_like(y)
    center = y == 0
    with np.errstate(divide="ignore"):
        z = y[~center] / s
        # log K via the exponentially scaled kve keeps large |x| from underflowing early
        out[~center] = np.exp(nu * np.log(z / 2) + np.log(special.kve(nu, z)) - z - log_norm)
    if alpha <= 1:
        out[center] = np.inf
    else:
        out[center] = math.exp(special.gammaln(nu) - math.log(2) - log_norm)
    return float(out) if out.ndim == 0 else out


def vg_cf(n: float, s: float, t):
    """cf of Q_n = sum of n products W_i Z_i of N(0, s^2) pairs: (1 + s^4 t^2)^(-n/2)"""
    if not n >= 1 or not s > 0:
        raise LimitLawError(f"vg_cf requires n >= 1 and s > 0, got n={n}, s={s}")
    return (1 + s ** 4 * np.asarray(t, dtype=float) ** 2) ** (-n / 2)


def vg_moments(n: float, s: float) -> Tuple[float, float]:
    if not n >= 1 or not s > 0:
        raise LimitLawError(f"vg_moments requires n >= 1 and s > 0, got n={n}, s={s}")
    return 0.0, n * s ** 4


def sample_q_n(n: int, s: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draws of Q_n as an explicit sum of products of independent N(0, s^2) pairs"""
    w = rng.normal(0.0, s, size=(size, n))
    z = rng.normal(0.0, s, size=(size, n))
    return (w * z).sum(axis=1)


@dataclass
class LawTable:
    x: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "pdf": self.pdf, "cdf": self.cdf})

    def total_mass(self) -> float:
        finite = np.isfinite(self.pdf)
        return float(integrate.trapezoid(self.pdf[finite], self.x[finite]))


def parse_grid(text: str) -> np.ndarray:
    """'lo:hi:step' -> inclusive grid"""
    try:
        lo, hi, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise LimitLawError(f"Grid must look like lo:hi:step, got '{text}'")
    if not (math.isfinite(lo) and math.isfinite(hi)) or step <= 0 or hi < lo:
        raise LimitLawError(f"Grid '{text}' is empty or infinite")
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


class LimitLaw(ABC):
    """Evaluable and sampleable limiting distribution"""

    kind: LawKind

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    @property
    @abstractmethod
    def label(self) -> str:
        ...

    @abstractmethod
    def pdf(self, x):
        ...

    @abstractmethod
    def cdf(self, x):
        ...

    def cdf_left(self, x):
        """Left limit F(x-); equals cdf for laws without atoms"""
        return self.cdf(x)

    @abstractmethod
    def cf(self, t):
        ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        ...

    @abstractmethod
    def moments(self) -> Tuple[float, float, float, float]:
        """Raw moments E[S^k] for k = 1..4"""

    @property
    def atoms(self) -> Dict[float, float]:
        return {}

    @property
    def singular_points(self) -> Tuple[float, ...]:
        return ()

    def params(self) -> Dict[str, Any]:
        return {}

    def tabulate(self, grid: Sequence[float]) -> LawTable:
        x = np.asarray(grid, dtype=float)
        return LawTable(x, np.asarray(self.pdf(x), dtype=float), np.asarray(self.cdf(x), dtype=float))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "label": self.label, **self.params()}


class GaussianLaw(LimitLaw):
    kind = LawKind.GAUSSIAN

    @property
    def label(self) -> str:
        return "gaussian"

    def pdf(self, x):
        return norm.pdf(x)

    def cdf(self, x):
        return norm.cdf(x)

    def cf(self, t):
        return np.exp(-np.asarray(t, dtype=float) ** 2 / 2)

    def sample(self, rng, size):
        return rng.standard_normal(size)

    def moments(self):
        return 0.0, 1.0, 0.0, 3.0


class GaussianScaleMixtureLaw(LimitLaw):
    """Law of sqrt(a + b u^2) Z with u ~ chi_k independent of Z ~ N(0, 1)"""

    def __init__(self, a: float, b: float, k: float):
        super().__init__()
        if a < 0 or b < 0 or a + b <= 0 or not k > 0:
            raise LimitLawError(f"Invalid scale mixture a={a}, b={b}, k={k}")
        self.a, self.b, self.k = float(a), float(b), float(k)

    @property
    def label(self) -> str:
        return f"scale-mixture(a={self.a:g},b={self.b:g},k={self.k:g})"

    @property
    def singular_points(self) -> Tuple[float, ...]:
        return (0.0,) if self.a == 0 and self.k <= 1 else ()

    def _scale(self, u):
        return np.sqrt(self.a + self.b * u * u)

    def _mixture(self, kernel: Callable[[np.ndarray, float], np.ndarray], x: np.ndarray, what: str) -> np.ndarray:
        out = np.empty_like(x)
        for lo in range(0, x.size, MIXTURE_CHUNK):
            chunk = x[lo:lo + MIXTURE_CHUNK]

            def integrand(u, chunk=chunk):
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    return chi.pdf(u, self.k) * kernel(chunk, self._scale(u))

            value, err = integrate.quad_vec(integrand, 0, np.inf, epsabs=MIXTURE_EPSABS,
                                            epsrel=MIXTURE_EPSREL, norm="max")
            if err > CF_MAX_RESIDUAL:
                raise QuadratureError(f"{self.label} {what} mixture integral did not converge", err)
            out[lo:lo + MIXTURE_CHUNK] = value
        return out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.b == 0:
            out = norm.pdf(x, scale=math.sqrt(self.a))
        elif self.a == 0:
            out = vg_pdf(self.k, 0.0, math.sqrt(self.b), 0.0, x)
        else:
            flat = x.ravel()
            out = self._mixture(lambda c, sigma: norm.pdf(c / sigma) / sigma, flat, "pdf").reshape(x.shape)
        return float(out) if np.ndim(out) == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.b == 0:
            out = norm.cdf(x, scale=math.sqrt(self.a))
        else:
            flat = x.ravel()
            # F(-x) = 1 - F(x); integrate the lower tail only for accuracy
            neg = -np.abs(flat)
            tail = self._mixture(lambda c, sigma: norm.cdf(c / sigma), neg, "cdf")
            out = np.where(flat <= 0, tail, 1.0 - tail)
            out[flat == 0] = 0.5
            out = out.reshape(x.shape)
        return float(out) if np.ndim(out) == 0 else out

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-self.a * t * t / 2) * (1 + self.b * t * t) ** (-self.k / 2)

    def sample(self, rng, size):
        g = rng.chisquare(self.k, size=size)
        return np.sqrt(self.a + self.b * g) * rng.standard_normal(size)

    def moments(self):
        a, b, k = self.a, self.b, self.k
        second = a + b * k
        fourth = 3 * (a * a + 2 * a * b * k + b * b * k * (k + 2))
        return 0.0, second, 0.0, fourth


class VarianceGammaLaw(GaussianScaleMixtureLaw):
    """Symmetric VG(alpha, 0, s^2, 0), i.e. the density vg_pdf(alpha, 0, s, 0, x)"""

    kind = LawKind.VG

    def __init__(self, alpha: float, s: float = 1.0):
        _check_vg(alpha, 0.0, s)
        super().__init__(0.0, s * s, alpha)
        self.alpha, self.s = float(alpha), float(s)

    @property
    def label(self) -> str:
        return f"vg(alpha={self.alpha:g},s={self.s:g})"

    def params(self):
        return {"alpha": self.alpha, "s": self.s}


class SLimitLaw(GaussianScaleMixtureLaw):
    """sqrt(1 - r^2) Z + r xi / sqrt(ell - 1) with xi ~ VG(ell - 1, 0, 1, 0)"""

    kind = LawKind.S_LIMIT

    def __init__(self, ell: int, r: float):
        if isinstance(ell, bool) or not isinstance(ell, (int, np.integer)) or ell < 2:
            raise LimitLawError(f"ell must be an integer >= 2, got {ell!r}")
        if not -1 <= r <= 1:
            raise LimitLawError(f"|r| must not exceed 1, got r={r}")
        self.ell, self.r = int(ell), float(r)
        super().__init__(1 - self.r ** 2, self.r ** 2 / (self.ell - 1), self.ell - 1)

    @property
    def label(self) -> str:
        return f"s-limit(ell={self.ell},r={self.r:g})"

    def pdf(self, x):
        if abs(self.r) == 1:
            # xi / sqrt(ell - 1) with the closed-form VG density
            scale = math.sqrt(self.ell - 1)
            return scale * vg_pdf(self.ell - 1, 0.0, 1.0, 0.0, np.asarray(x, dtype=float) * scale)
        return super().pdf(x)

    def params(self):
        return {"ell": self.ell, "r": self.r}


class VGStandardizedLaw(SLimitLaw):
    """VG(ell - 1, 0, 1, 0) scaled to unit variance; the r = 1 bipartite limit"""

    kind = LawKind.VG_STANDARDIZED

    def __init__(self, ell: int):
        super().__init__(ell, 1.0)

    @property
    def label(self) -> str:
        return f"vg-standardized(ell={self.ell})"

    def params(self):
        return {"ell": self.ell}


class MixtureTwoHubLaw(LimitLaw):
    """
    Equal-weight mixture of N(0, 1 - r^2) and N(0, 1 + r^2). At |r| = 1 the first
    component is an atom of mass 1/2 at 0; pdf then returns the density of the
    absolutely continuous part and cdf is right-continuous.
    """

    kind = LawKind.MIXTURE_TWO_HUB

    def __init__(self, r: float):
        super().__init__()
        if not -1 <= r <= 1:
            raise LimitLawError(f"|r| must not exceed 1, got r={r}")
        self.r = float(r)
        self.sigma_low = math.sqrt(1 - self.r ** 2)
        self.sigma_high = math.sqrt(1 + self.r ** 2)
        if self.degenerate:
            self.logger.debug("Two-hub mixture at |r| = 1: low component is an atom at 0")

    @property
    def degenerate(self) -> bool:
        return self.sigma_low == 0

    @property
    def label(self) -> str:
        return f"two-hub-mixture(r={self.r:g})"

    @property
    def atoms(self) -> Dict[float, float]:
        return {0.0: 0.5} if self.degenerate else {}

    def params(self):
        return {"r": self.r, "atoms": {str(k): v for k, v in self.atoms.items()}}

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = 0.5 * norm.pdf(x, scale=self.sigma_high)
        if not self.degenerate:
            out = out + 0.5 * norm.pdf(x, scale=self.sigma_low)
        return float(out) if out.ndim == 0 else out

    def _cdf(self, x, right: bool):
        x = np.asarray(x, dtype=float)
        out = 0.5 * norm.cdf(x, scale=self.sigma_high)
        if self.degenerate:
            out = out + 0.5 * ((x >= 0) if right else (x > 0))
        else:
            out = out + 0.5 * norm.cdf(x, scale=self.sigma_low)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        return self._cdf(x, right=True)

    def cdf_left(self, x):
        return self._cdf(x, right=False)

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * np.exp(-(1 - self.r ** 2) * t * t / 2) + 0.5 * np.exp(-(1 + self.r ** 2) * t * t / 2)

    def sample(self, rng, size):
        z1 = rng.standard_normal(size)
        z2 = rng.standard_normal(size)
        hubs_match = rng.integers(0, 2, size=size)
        return self.sigma_low * z1 + self.r * math.sqrt(2) * hubs_match * z2

    def moments(self):
        return 0.0, 1.0, 0.0, 3 * (1 + self.r ** 4)


def s_limit(ell: int, r: float) -> SLimitLaw:
    return SLimitLaw(ell, r)


def mixture_two_hub(r: float) -> MixtureTwoHubLaw:
    return MixtureTwoHubLaw(r)


def _options(text: str) -> Dict[str, float]:
    options = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise LimitLawError(f"Law option '{item}' must look like key=value")
        options[key.strip()] = float(value)
    return options


def law_from_spec(text: str) -> LimitLaw:
    """
    Parse 'gaussian', 'vg:alpha=1,s=1', 'vg-standardized:ell=2',
    's-limit:ell=2,r=0.99' or 'two-hub-mixture:r=1'
    """
    name, _, rest = text.strip().lower().partition(":")
    opts = _options(rest)
    try:
        if name in ("gaussian", "normal"):
            return GaussianLaw()
        if name == "vg" and "ell" in opts:
            return VGStandardizedLaw(int(opts["ell"]))
        if name == "vg":
            alpha = opts.get("alpha", opts.get("n", 1.0))
            return VarianceGammaLaw(alpha, opts.get("s", 1.0))
        if name in ("vg-standardized", "vg_standardized"):
            return VGStandardizedLaw(int(opts.get("ell", 2)))
        if name in ("s-limit", "s_limit"):
            return SLimitLaw(int(opts.get("ell", 2)), opts["r"])
        if name in ("two-hub-mixture", "mixture_two_hub", "two_hub_mixture"):
            return MixtureTwoHubLaw(opts.get("r", 1.0))
    except KeyError as e:
        raise LimitLawError(f"Law '{name}' requires option {e}")
    raise LimitLawError(f"Unknown law '{text}'")


def _half_line(f: Callable[[float], float], w: float, weight: str, start: float = 0.0) -> Tuple[float, float]:
    """Integral of f(t) cos(w t) or f(t) sin(w t) over (start, inf)"""
    if w == 0:
        if weight == "sin":
            return 0.0, 0.0
        return integrate.quad(f, start, np.inf, limit=QUAD_LIMIT)
    sign = -1.0 if (weight == "sin" and w < 0) else 1.0
    value, err = integrate.quad(f, start, np.inf, weight=weight, wvar=abs(w), limlst=100, limit=QUAD_LIMIT)
    return sign * value, err


def cf_invert(cf: Callable, grid: Iterable[float], singular_at: Sequence[float] = (),
              max_residual: float = CF_MAX_RESIDUAL) -> LawTable:
    """
    Gil-Pelaez inversion of a characteristic function on a grid:
    pdf(x) = (1/pi) int_0^inf Re[e^{-itx} cf(t)] dt,
    cdf(x) = 1/2 - (1/pi) int_0^inf Im[e^{-itx} cf(t)] / t dt.
    Points in singular_at get pdf = +inf.
    """
    x = np.asarray(list(grid), dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise LimitLawError("cf_invert needs a finite, nonempty grid")
    probe = abs(complex(np.asarray(cf(CF_DECAY_PROBE)).item()))
    if probe >= CF_DECAY_TOLERANCE:
        raise CfInversionError(f"cf does not decay (|cf({CF_DECAY_PROBE:g})| = {probe:.3g}); "
                               "the law has an atom or its density is not recoverable")

    def re(t):
        return complex(np.asarray(cf(t)).item()).real

    def im(t):
        return complex(np.asarray(cf(t)).item()).imag

    symmetric = all(abs(im(t)) < 1e-15 for t in (0.3, 1.0, 2.7, 10.0))
    singular = set(float(s) for s in singular_at)
    pdf = np.empty_like(x)
    cdf = np.empty_like(x)
    worst = 0.0

    for i, xi in enumerate(x):
        if xi in singular:
            pdf[i] = np.inf
        else:
            value, err = _half_line(re, xi, "cos")
            if not symmetric:
                extra, extra_err = _half_line(im, xi, "sin")
                value, err = value + extra, err + extra_err
            pdf[i] = value / math.pi
            worst = max(worst, err / math.pi)

        # Re cf(t) sin(tx)/t is regular at 0: plain quadrature on (0, 1], Fourier weight beyond
        head, head_err = integrate.quad(lambda t: re(t) * math.sin(t * xi) / t if t else xi, 0.0, 1.0)
        tail, tail_err = _half_line(lambda t: re(t) / t, xi, "sin", start=1.0)
        total, total_err = head + tail, head_err + tail_err
        if not symmetric:
            head, head_err = integrate.quad(lambda t: im(t) * math.cos(t * xi) / t, 0.0, 1.0)
            tail, tail_err = _half_line(lambda t: im(t) / t, xi, "cos", start=1.0)
            total, total_err = total - head - tail, total_err + head_err + tail_err
        cdf[i] = 0.5 + total / math.pi
        worst = max(worst, total_err / math.pi)

    if worst > max_residual:
        raise CfInversionError("cf inversion did not reach its accuracy target", worst)

    finite = np.isfinite(pdf)
    most_negative = float(pdf[finite].min()) if finite.any() else 0.0
    if most_negative < -PDF_NEGATIVE_TOLERANCE:
        raise CfInversionError(f"Inverted pdf is negative ({most_negative:.3e}) beyond tolerance", worst)
    pdf[finite] = np.maximum(pdf[finite], 0.0)

    order = np.argsort(x, kind="stable")
    repaired = np.maximum.accumulate(np.clip(cdf[order], 0.0, 1.0))
    repair = float(np.max(repaired - cdf[order]))
    if repair > 0:
        logger.debug(f"cdf monotonicity repair of magnitude {repair:.3e}")
    cdf[order] = repaired
    logger.debug(f"cf inversion on {x.size} points, worst residual {worst:.3e}")
    return LawTable(x, pdf, cdf)


def tabulate_law(law: LimitLaw, grid: Sequence[float], via_cf: bool = False) -> LawTable:
    """pdf/cdf table of a law, either closed form / mixture or by cf inversion"""
    if via_cf:
        if law.atoms:
            raise CfInversionError(f"{law.label} has atoms; use the closed-form table")
        return cf_invert(law.cf, grid, singular_at=law.singular_points)
    return law.tabulate(grid)
