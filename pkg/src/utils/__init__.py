from .logger import configure_logging, setup_logger
from .parallel import parallel_map
from .seeding import derive_seed

__all__ = ["configure_logging", "setup_logger", "parallel_map", "derive_seed"]
