# core/utils.py
import hashlib
import json
import logging
import os
import platform
from importlib import metadata
from typing import Any, Dict, Optional

import pandas as pd

from config import CSV_FLOAT_FORMAT
from core.exceptions import ConfigError

logger = logging.getLogger(__name__)

HASH_PREFIX = "# config_hash="
TRACKED_PACKAGES = ("numpy", "pandas", "scipy", "networkx", "sympy", "python-dotenv")


def ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(payload: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a config"""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def save_results(results: Any, output_path: str):
    """Save results to a JSON file"""
    try:
        ensure_parent(output_path)
        with open(output_path, "w") as f:
            json.dump(results, f, indent=2)
            f.write("\n")
        logger.debug(f"Wrote {output_path}")
    except (OSError, TypeError) as e:
        logger.error(f"Error saving results to {output_path}: {str(e)}")
        raise ConfigError(f"Could not write {output_path}: {e}")


def load_results(input_path: str) -> Any:
    """Load results from a JSON file"""
    try:
        with open(input_path, "r") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error loading results from {input_path}: {str(e)}")
        raise ConfigError(f"Could not read {input_path}: {e}")


def save_frame(frame: pd.DataFrame, output_path: str, hash_hex: Optional[str] = None):
    """CSV with an optional '# config_hash=<hex>' header line"""
    try:
        ensure_parent(output_path)
        with open(output_path, "w", newline="") as f:
            if hash_hex:
                f.write(f"{HASH_PREFIX}{hash_hex}\n")
            frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        logger.debug(f"Wrote {len(frame)} rows to {output_path}")
    except OSError as e:
        logger.error(f"Error saving table to {output_path}: {str(e)}")
        raise ConfigError(f"Could not write {output_path}: {e}")


def read_frame_hash(input_path: str) -> Optional[str]:
    with open(input_path, "r") as f:
        first = f.readline().strip()
    return first[len(HASH_PREFIX):] if first.startswith(HASH_PREFIX) else None


def load_frame(input_path: str, expected_hash: Optional[str] = None) -> pd.DataFrame:
    """Read a CSV written by save_frame, rejecting it if its hash differs from expected_hash"""
    try:
        found = read_frame_hash(input_path)
        if expected_hash is not None and found != expected_hash:
            raise ConfigError(f"{input_path} carries config hash {found}, expected {expected_hash}")
        return pd.read_csv(input_path, comment="#")
    except OSError as e:
        logger.error(f"Error loading table from {input_path}: {str(e)}")
        raise ConfigError(f"Could not read {input_path}: {e}")


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "missing"
    return versions
