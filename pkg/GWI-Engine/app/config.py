"""
GWI Engine Configuration

Environment-driven configuration for the simulation and verification engine.
Safely handles both local development (.env file) and batch environments
(system environment variables only).
"""

import os
import logging

# =============================================================================
# Environment Detection and Configuration Loading
# =============================================================================

# Detect environment (development/production)
ENV = os.getenv("ENV", "development")

# Load .env ONLY for local development
DOTENV_STATUS = "skipped"
if ENV == "development":
    try:
        from dotenv import load_dotenv
        load_dotenv()
        DOTENV_STATUS = "loaded"
    except ImportError:
        DOTENV_STATUS = "python-dotenv not installed"
    except Exception as e:
        DOTENV_STATUS = f"failed: {e}"

# =============================================================================
# Application Metadata
# =============================================================================

APP_NAME = "GWI Engine"
APP_VERSION = "1.0.0"
APP_DESCRIPTION = (
    "Simulation and verification engine for critical Galton-Watson processes "
    "with immigration and their squared Bessel diffusion limit"
)

# Versioned document formats
SCENARIO_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1
BINARY_FORMAT_VERSION = 1

# =============================================================================
# Simulation Configuration
# =============================================================================


def _optional_int(name: str):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    return int(raw)


def seed_override():
    """Master seed from GWI_SEED, read at call time (takes precedence over the scenario file)"""
    return _optional_int("GWI_SEED")


GWI_SEED = seed_override()

# Worker pool size (default: hardware parallelism)
DEFAULT_THREADS = int(os.getenv("GWI_THREADS", os.cpu_count() or 1))

# Paths simulated together; never changes results, only memory and speed
BLOCK_SIZE = int(os.getenv("GWI_BLOCK_SIZE", 4096))

# Output directory for CSV/JSON artifacts
OUTPUT_DIR = os.getenv("GWI_OUTPUT_DIR", "output")

# =============================================================================
# Cache Configuration
# =============================================================================

CACHE_MAX_MB = int(os.getenv("GWI_CACHE_MAX_MB", 1024))

# =============================================================================
# Reporting Configuration
# =============================================================================

# tqdm progress bars over path blocks
SHOW_PROGRESS = os.getenv("GWI_PROGRESS", "1") not in ("0", "false", "False", "")

# runtime_ms in JSON reports breaks byte-identical reruns, so it is opt-in
REPORT_TIMINGS = os.getenv("GWI_REPORT_TIMINGS", "0") in ("1", "true", "True")

# =============================================================================
# Logging Configuration
# =============================================================================

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")


def setup_logging(level: str = None):
    """Setup application logging with environment-appropriate configuration"""
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper()),
        format=log_format,
        datefmt=date_format
    )

    logger = logging.getLogger(__name__)
    logger.debug(f"🔧 Environment: {ENV} (.env {DOTENV_STATUS})")
    logger.debug(f"📊 Log Level: {level or LOG_LEVEL}")

# =============================================================================
# Startup Validation and Logging
# =============================================================================


def validate_and_log_configuration(threads: int = None):
    """
    Validate configuration and log startup information.
    This function is called by the CLI before running a command.
    """
    logger = logging.getLogger(__name__)
    threads = threads or DEFAULT_THREADS

    logger.info("=" * 60)
    logger.info(f"🚀 {APP_NAME} v{APP_VERSION}")
    logger.info(f"🔧 Environment: {ENV}")
    logger.info("=" * 60)

    seed = seed_override()
    if seed is not None:
        logger.info(f"🎲 GWI_SEED={seed} overrides scenario master_seed")

    if threads < 1:
        raise ValueError(f"Worker pool size must be positive, got {threads}")
    if BLOCK_SIZE < 1:
        raise ValueError(f"GWI_BLOCK_SIZE must be positive, got {BLOCK_SIZE}")

    logger.info(f"🧵 Worker threads: {threads}")
    logger.info(f"📦 Block size: {BLOCK_SIZE} paths")
    logger.info(f"💾 Block cache budget: {CACHE_MAX_MB} MB")

    if REPORT_TIMINGS:
        logger.warning("⏱️ GWI_REPORT_TIMINGS on - reports are no longer byte-identical across runs")

    logger.info("=" * 60)

    return {
        "environment": ENV,
        "threads": threads,
        "block_size": BLOCK_SIZE,
        "cache_max_mb": CACHE_MAX_MB,
        "seed_override": seed,
    }

# =============================================================================
# Configuration Export
# =============================================================================

__all__ = [
    # Environment
    "ENV",

    # Application
    "APP_NAME",
    "APP_VERSION",
    "APP_DESCRIPTION",
    "SCENARIO_SCHEMA_VERSION",
    "REPORT_SCHEMA_VERSION",
    "BINARY_FORMAT_VERSION",

    # Simulation
    "GWI_SEED",
    "seed_override",
    "DEFAULT_THREADS",
    "BLOCK_SIZE",
    "OUTPUT_DIR",

    # Cache
    "CACHE_MAX_MB",

    # Reporting
    "SHOW_PROGRESS",
    "REPORT_TIMINGS",

    # Logging
    "LOG_LEVEL",

    # Functions
    "setup_logging",
    "validate_and_log_configuration"
]
