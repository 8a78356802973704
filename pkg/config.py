# config.py
import os
from dotenv import load_dotenv

load_dotenv()

API_V1_STR: str = os.getenv("API_V1_STR", "/api")
PROJECT_NAME: str = os.getenv("PROJECT_NAME", "SquarePack-Server")
CORS_ORIGINS: str = os.getenv("CORS_ORIGINS", "http://localhost:3000")

LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

BASE_DIR: str = os.path.dirname(os.path.abspath(__file__))
BEST_KNOWN_TABLE: str = os.getenv(
    "BEST_KNOWN_TABLE", os.path.join(BASE_DIR, "data", "best_known.csv")
)

# Billiards defaults (every SimParams field can still be overridden per run)
GROWTH_RATE: float = float(os.getenv("GROWTH_RATE", "0.01"))
INITIAL_SPEED_SCALE: float = float(os.getenv("INITIAL_SPEED_SCALE", "1.0"))
JAM_REL_GROWTH_TOL: float = float(os.getenv("JAM_REL_GROWTH_TOL", "1e-13"))
JAM_FREE_PATH_TOL: float = float(os.getenv("JAM_FREE_PATH_TOL", "1e-9"))
EVENT_WINDOW: int = int(os.getenv("EVENT_WINDOW", "10000"))
MAX_EVENTS: int = int(os.getenv("MAX_EVENTS", "20000000"))
NEIGHBOR_CELL_SIZE_FACTOR: float = float(os.getenv("NEIGHBOR_CELL_SIZE_FACTOR", "1.2"))
RERANDOMIZE_EVERY: int = int(os.getenv("RERANDOMIZE_EVERY", "1000000"))
# tighten shrinks the start diameter by this fraction so touching disks can move
TIGHTEN_START_SLACK: float = float(os.getenv("TIGHTEN_START_SLACK", "1e-3"))

# Tolerances, relative to the disk diameter m
BOND_TOL_REL: float = float(os.getenv("BOND_TOL_REL", "1e-12"))
GAP_FLOOR_REL: float = float(os.getenv("GAP_FLOOR_REL", "1e-7"))
STRONG_GAP_FLOOR_REL: float = float(os.getenv("STRONG_GAP_FLOOR_REL", "1e-5"))
REFINE_BOND_TOL_REL: float = float(os.getenv("REFINE_BOND_TOL_REL", "1e-9"))
