# presets/experiment_presets.py
from typing import Any, Dict

from config import TAIL_GRID
from core.exceptions import ConfigError
from core.experiment import ExperimentConfig

# Density and cdf of the bipartite limit at ell = 2 for increasing r
FIGURE2 = {
    "name": "figure2",
    "seed": 0,
    "laws": ["s-limit:ell=2,r=0.6", "s-limit:ell=2,r=0.8", "s-limit:ell=2,r=0.99"],
    "grid": TAIL_GRID,
}

# Same limit at r = 0.99 for increasing ell
FIGURE3 = {
    "name": "figure3",
    "seed": 0,
    "laws": ["s-limit:ell=2,r=0.99", "s-limit:ell=4,r=0.99", "s-limit:ell=6,r=0.99"],
    "grid": TAIL_GRID,
}

# Normality protocol on a girth-6 incidence cage with uniform margins
SECTION5 = {
    "name": "section5",
    "seed": 5,
    "family": "cage",
    "param": 7,
    "ell": 2,
    "margin": "uniform01",
    "replications": 5000,
    "statistic": "s_n",
    "tests": ["ks", "ad", "chi2"],
    "reference_law": "gaussian",
}

THEOREM2_CONVERGENCE = {
    "name": "theorem2-convergence",
    "seed": 2,
    "family": "bipartite",
    "param": 300,
    "ell": 2,
    "replications": 100000,
    "fast_path": True,
    "statistic": "xi_std",
    "tests": ["ks", "moments"],
    "reference_law": "vg-standardized:ell=2",
    "ks_max": 0.02,
    "lattice_allowance": True,
}

THEOREM3_CONVERGENCE = {
    "name": "theorem3-convergence",
    "seed": 3,
    "family": "two_hub",
    "param": 400,
    "ell": 2,
    "replications": 100000,
    "fast_path": True,
    "statistic": "xi_std",
    "tests": ["ks", "moments"],
    "reference_law": "two-hub-mixture:r=1",
    "ks_max": 0.02,
}

HYPERCUBE_CLT = {
    "name": "hypercube-clt",
    "seed": 4,
    "family": "hypercube",
    "param": 8,
    "ell": 2,
    "replications": 5000,
    "statistic": "xi_std",
    "dequantize": True,
    "tests": ["ks", "ad"],
    "reference_law": "gaussian",
}

FAN_CLT = {
    "name": "fan-clt",
    "seed": 6,
    "family": "fan",
    "param": 500,
    "ell": 2,
    "replications": 5000,
    "fast_path": True,
    "statistic": "xi_std",
    "dequantize": True,
    "tests": ["ks", "ad"],
    "reference_law": "gaussian",
}

PRESETS: Dict[str, Dict[str, Any]] = {
    preset["name"]: preset
    for preset in (FIGURE2, FIGURE3, SECTION5, THEOREM2_CONVERGENCE,
                   THEOREM3_CONVERGENCE, HYPERCUBE_CLT, FAN_CLT)
}


def get_preset(name: str, **overrides) -> ExperimentConfig:
    """Fresh ExperimentConfig for a named preset; overrides replace top-level keys"""
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}'. Available: {', '.join(PRESETS)}")
    payload = {key: (list(value) if isinstance(value, list) else value)
               for key, value in PRESETS[name].items()}
    payload.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(payload)
