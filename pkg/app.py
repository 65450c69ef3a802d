# app.py
import logging
import os
import sys
from datetime import datetime

# Add project root to path
current_path = os.path.dirname(os.path.abspath(__file__))
if current_path not in sys.path:
    sys.path.insert(0, current_path)

from config import LOG_DIR, LOG_LEVEL
from cli.commands import main


def configure_logging(log_dir: str = LOG_DIR, level: str = LOG_LEVEL) -> str:
    """File handler under log_dir plus stderr; returns the log file path"""
    os.makedirs(log_dir, exist_ok=True)
    log_filename = os.path.join(log_dir, f"kwise_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_filename),
            logging.StreamHandler(sys.stderr)
        ]
    )
    return log_filename


if __name__ == "__main__":
    log_filename = configure_logging()
    logging.getLogger(__name__).info(f"Starting kwise {' '.join(sys.argv[1:])}, logging to {log_filename}")
    sys.exit(main())
