import os
from dotenv import load_dotenv

# Pick up overrides from a local .env file
load_dotenv()

class Config:
    """Default run parameters read from environment variables."""

    # Accuracy and budgets
    EPS = float(os.getenv("BL_EPS", "0.01"))
    MAX_STEPS = int(os.getenv("BL_MAX_STEPS", "20000"))
    FEASIBILITY_STEPS = int(os.getenv("BL_FEASIBILITY_STEPS", "2000"))
    G_TARGET = float(os.getenv("BL_G_TARGET", "1e-8"))
    DS_TARGET = float(os.getenv("BL_DS_TARGET", "1e-10"))
    CHECKPOINT_EVERY = int(os.getenv("BL_CHECKPOINT_EVERY", "10"))
    STAGNATION_WINDOW = int(os.getenv("BL_STAGNATION_WINDOW", "50"))

    # Witness search
    WITNESS_MAX_DENOMINATOR = int(os.getenv("BL_WITNESS_MAX_DENOMINATOR", str(10**6)))
    LATTICE_LIMIT = int(os.getenv("BL_LATTICE_LIMIT", "400"))

    # Execution
    THREADS = int(os.getenv("BL_THREADS", "1"))
    # Bits for mpmath alternating scaling; unset keeps float64
    PRECISION = int(os.getenv("BL_PRECISION", "0")) or None
    SEED = int(os.getenv("BL_SEED", "0"))
    LOG_LEVEL = os.getenv("BL_LOG_LEVEL", "WARNING")
