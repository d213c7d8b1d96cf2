"""Monte Carlo simulation of NV-center quantum network protocols."""

from .network import (
    HardwareProfile,
    PROFILES,
    ideal_profile,
    natural_profile,
    purified_profile,
)
from .protocols import run_ghz, run_nonlocal_cnot, sweep_memory_lifetime
from .register import FactoredRegister, InvariantViolation, QubitId
from .seeding import derive_stream

__version__ = "0.1.0"

__all__ = [
    "FactoredRegister",
    "HardwareProfile",
    "InvariantViolation",
    "PROFILES",
    "QubitId",
    "derive_stream",
    "ideal_profile",
    "natural_profile",
    "purified_profile",
    "run_ghz",
    "run_nonlocal_cnot",
    "sweep_memory_lifetime",
    "__version__",
]
