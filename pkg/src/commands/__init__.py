"""Command-line subcommands, one module per subcommand."""

from .capacity import capacity_command
from .constant import constant_command
from .feasible import feasible_command
from .polytope import polytope_group
from .scale import scale_command

__all__ = [
    "capacity_command",
    "constant_command",
    "feasible_command",
    "polytope_group",
    "scale_command",
]
