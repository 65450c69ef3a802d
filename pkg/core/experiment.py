# core/experiment.py
"""
Declarative experiment configs and the orchestrator that turns one into
sample tables, law tables, goodness-of-fit reports and a manifest.
"""
import logging
import os
import re
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from config import DEFAULT_GRID, OUTPUT_DIR
from core.exceptions import ConfigError, KwiseError
from core.graph_families import FamilyTag, family_size
from core.limit_laws import (GaussianLaw, LimitLaw, MixtureTwoHubLaw, SLimitLaw, VGStandardizedLaw,
                             law_from_spec, parse_grid, tabulate_law)
from core.margins import MarginSpec, margin_by_name, margin_from_config
from core.sampler import simulate_to_frame
from core.stats_tests import battery_rejections, dequantize_xi, excess_atom, moment_suite, run_battery
from core.utils import config_hash, package_versions, save_frame, save_results

logger = logging.getLogger(__name__)

STATISTICS = ("xi_std", "s_n")
TESTS = ("ks", "ad", "chi2", "moments")
JITTER_STREAM = 2 ** 32 - 1  # spawn key of the dequantization stream, far above any block index
ATOM_STREAM = 2 ** 32 - 2  # randomized probability transform at atoms


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one run; output_dir is excluded from the hash"""

    name: str
    seed: int
    family: Optional[str] = None
    param: Optional[int] = None
    ell: int = 2
    margin: Optional[Union[str, Dict[str, Any]]] = None
    replications: int = 0
    fast_path: bool = False
    statistic: str = "xi_std"
    dequantize: bool = False
    tests: List[str] = field(default_factory=list)
    bins: Optional[int] = None
    reference_law: Optional[str] = None
    laws: List[str] = field(default_factory=list)
    grid: str = DEFAULT_GRID
    via_cf: bool = False
    alpha: float = 0.001
    ks_max: Optional[float] = None
    lattice_allowance: bool = False
    assert_mode: bool = False
    output_dir: str = OUTPUT_DIR

    def validate(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"Config '{self.name}' needs an explicit non-negative integer seed")
        if self.family is None and not self.laws:
            raise ConfigError(f"Config '{self.name}' has neither a graph family nor laws to tabulate")
        if self.family is not None:
            FamilyTag.parse(self.family)
            if not isinstance(self.param, int) or self.param < 1:
                raise ConfigError(f"Config '{self.name}' needs a positive integer param")
            if not isinstance(self.replications, int) or self.replications < 1:
                raise ConfigError(f"Config '{self.name}' needs replications >= 1")
        if self.statistic not in STATISTICS:
            raise ConfigError(f"statistic must be one of {STATISTICS}, got '{self.statistic}'")
        if self.statistic == "s_n" and self.margin is None:
            raise ConfigError("statistic 's_n' requires a margin")
        unknown = [t for t in self.tests if t not in TESTS]
        if unknown:
            raise ConfigError(f"Unknown tests {unknown}; expected a subset of {TESTS}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.ks_max is not None and not 0 < self.ks_max < 1:
            raise ConfigError(f"ks_max must lie in (0, 1), got {self.ks_max}")
        if self.lattice_allowance and self.ks_max is None:
            raise ConfigError("lattice_allowance only applies together with ks_max")
        parse_grid(self.grid)
        _check_writable(self.output_dir)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        if "seed" not in payload:
            raise ConfigError("Config is missing the mandatory 'seed'")
        try:
            return cls(**payload)
        except TypeError as e:
            raise ConfigError(f"Invalid config: {e}")

    @property
    def hash(self) -> str:
        payload = self.to_dict()
        payload.pop("output_dir")
        return config_hash(payload)


def _check_writable(path: str):
    existing = os.path.abspath(path)
    while not os.path.exists(existing):
        parent = os.path.dirname(existing)
        if parent == existing:
            break
        existing = parent
    if not os.access(existing, os.W_OK):
        raise ConfigError(f"Output location {path} is not writable")


@dataclass
class ExperimentResult:
    exit_code: int
    artifacts: Dict[str, str]
    config_hash: str
    rejections: List[str] = field(default_factory=list)


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def build_margin(margin: Optional[Union[str, Dict[str, Any]]], ell: int) -> Optional[MarginSpec]:
    if margin is None:
        return None
    if isinstance(margin, dict):
        return margin_from_config({"ell": ell, **margin})
    return margin_by_name(margin, ell)


def default_reference_law(family: Union[str, FamilyTag], ell: int, spec: Optional[MarginSpec],
                          statistic: str) -> LimitLaw:
    """The limit each family's standardized count or mean converges to"""
    tag = FamilyTag.parse(family)
    if tag is FamilyTag.BIPARTITE:
        return VGStandardizedLaw(ell) if statistic == "xi_std" else SLimitLaw(ell, spec.r)
    if tag is FamilyTag.TWO_HUB:
        return MixtureTwoHubLaw(1.0 if statistic == "xi_std" else spec.r)
    return GaussianLaw()


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """
    Write law tables, samples.csv, gof.json and manifest.json under
    config.output_dir. Outputs other than the manifest's wall time are a
    deterministic function of the config.
    """
    config.validate()
    started = time.perf_counter()
    hash_hex = config.hash
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    logger.info(f"Running experiment '{config.name}' (hash {hash_hex[:12]}) into {out}")

    artifacts: Dict[str, str] = {}
    rejections: List[str] = []

    for spec_text in config.laws:
        law = law_from_spec(spec_text)
        table = tabulate_law(law, parse_grid(config.grid), via_cf=config.via_cf)
        name = f"law-{_slug(law.label)}.csv"
        save_frame(table.to_frame(), os.path.join(out, name), hash_hex)
        artifacts[name] = spec_text
        logger.info(f"Tabulated {law.label}: mass on grid {table.total_mass():.6f}")

    if config.family is not None:
        spec = build_margin(config.margin, config.ell)
        frame = simulate_to_frame((config.family, config.param), spec, config.replications,
                                  config.seed, config.fast_path, config.ell, workers)
        save_frame(frame, os.path.join(out, "samples.csv"), hash_hex)
        artifacts["samples.csv"] = "samples"

        if config.tests:
            gof = evaluate_samples(frame, config, spec)
            save_results({"config_hash": hash_hex, **gof}, os.path.join(out, "gof.json"))
            artifacts["gof.json"] = "reports"
            rejections = gof["rejections"]

    manifest = {
        "config_hash": hash_hex,
        "name": config.name,
        "seed": config.seed,
        "config": config.to_dict(),
        "versions": package_versions(),
        "artifacts": artifacts,
        "wall_time_seconds": round(time.perf_counter() - started, 3),
    }
    save_results(manifest, os.path.join(out, "manifest.json"))
    artifacts["manifest.json"] = "manifest"

    exit_code = 3 if (config.assert_mode and rejections) else 0
    if rejections:
        logger.warning(f"Experiment '{config.name}' rejected: {rejections}")
    return ExperimentResult(exit_code, artifacts, hash_hex, rejections)


def evaluate_samples(frame: pd.DataFrame, config: ExperimentConfig,
                     spec: Optional[MarginSpec]) -> Dict[str, Any]:
    """Run the configured battery on the sample column against the reference law"""
    law = (law_from_spec(config.reference_law) if config.reference_law
           else default_reference_law(config.family, config.ell, spec, config.statistic))
    values = frame[config.statistic].to_numpy()
    if config.statistic == "xi_std" and config.dequantize:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(JITTER_STREAM,)))
        n = family_size(config.family, config.param)[1]
        values = dequantize_xi(frame["xi_count"].to_numpy(), n, config.ell, rng)

    battery = [t for t in config.tests if t != "moments"]
    atom_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(ATOM_STREAM,)))
    reports = run_battery(values, law, battery, config.bins, rng=atom_rng) if battery else []
    allowance = excess_atom(values, law) / 2 if config.lattice_allowance else 0.0
    rejections = battery_rejections(reports, config.alpha, config.ks_max, allowance)
    payload: Dict[str, Any] = {
        "statistic": config.statistic,
        "reference_law": law.to_dict(),
        "reports": [r.to_dict() for r in reports],
    }
    if "moments" in config.tests:
        moments = moment_suite(values, law)
        payload["moments"] = moments.to_dict()
        if not moments.passed:
            rejections.append("moments")
    payload["rejections"] = rejections
    return payload


def describe_error(error: Exception) -> Dict[str, Any]:
    """Machine-readable error object for any failure surfaced by the CLI"""
    if isinstance(error, KwiseError):
        return error.to_dict()
    return {"error": str(error), "type": type(error).__name__, "exit_code": 1}
