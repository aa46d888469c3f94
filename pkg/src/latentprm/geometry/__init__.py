"""Workspaces, occupancy grids, robot kinematics and the exact collision oracle."""

from .collision import (
    collide,
    edge_steps,
    interpolate,
    normalized_distance,
    shortest_delta,
    validate_edge,
)
from .grid import OccupancyGrid, rasterize
from .robots import (
    LinkSpec,
    OrientedBox,
    RobotModel,
    boxchain7,
    boxchain8,
    boxchain9,
    forward_kinematics,
    get_robot,
    point2d,
    wrap_config,
)
from .workspace import (
    PROFILES,
    AxisAlignedBox,
    Workspace,
    WorkspaceClass,
    empty_workspace,
    generate_workspace,
)

__all__ = [
    "AxisAlignedBox",
    "LinkSpec",
    "OccupancyGrid",
    "OrientedBox",
    "PROFILES",
    "RobotModel",
    "Workspace",
    "WorkspaceClass",
    "boxchain7",
    "boxchain8",
    "boxchain9",
    "collide",
    "edge_steps",
    "empty_workspace",
    "forward_kinematics",
    "generate_workspace",
    "get_robot",
    "interpolate",
    "normalized_distance",
    "point2d",
    "rasterize",
    "shortest_delta",
    "validate_edge",
    "wrap_config",
]
