"""Transmitter case study: block library, FL/PTL8/PTL4 models, modes and bugs."""
from .blocks import BLOCK_FUNCTIONS, reference_bits, register_blocks
from .bugs import BUGS, InapplicableBug, inject
from .models import (
    BLOCKS, LEVELS, MODE_TABLE, UNITS, build_model, bundled_files, completion_cycle,
    data_dir, load_bundled, mode_bindings, scenarios, write_bundled,
)

__all__ = [
    "BLOCK_FUNCTIONS", "reference_bits", "register_blocks", "BUGS", "InapplicableBug",
    "inject", "BLOCKS", "LEVELS", "MODE_TABLE", "UNITS", "build_model", "bundled_files",
    "completion_cycle", "data_dir", "load_bundled", "mode_bindings", "scenarios",
    "write_bundled",
]
