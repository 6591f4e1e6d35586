"""Fixed-outline floorplanning by feasibility seeking with superiorization."""
from .driver import SolveResult, SolverConfig, per_rmap_solve, post_process, solve
from .formats import FormatError, load_instance, parse_instance, read_result, write_result
from .initialization import initialize
from .model import (
    DieRegion,
    Instance,
    InstanceError,
    IoPinSpec,
    ModuleSpec,
    Net,
    PinSpec,
    check_feasible,
    hpwl,
    hpwl_subgradient,
    make_placement,
    relative_overlap_area,
)
from .rmap import RmapConfig, map_sweep, rmap_sweep
from .superiorization import SmConfig
from .svg import render_svg

__all__ = [
    "DieRegion", "FormatError", "Instance", "InstanceError", "IoPinSpec", "ModuleSpec", "Net", "PinSpec",
    "RmapConfig", "SmConfig", "SolveResult", "SolverConfig", "check_feasible", "hpwl", "hpwl_subgradient",
    "initialize", "load_instance", "make_placement", "map_sweep", "parse_instance", "per_rmap_solve",
    "post_process", "read_result", "relative_overlap_area", "render_svg", "rmap_sweep", "solve", "write_result",
]
