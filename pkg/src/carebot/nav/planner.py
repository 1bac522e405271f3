"""A* global planning over the layered costmap."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from ..geometry import Pose2D
from .costmap import CostmapStack

SQRT2 = math.sqrt(2.0)

# 8-connected moves with their step costs in cells.
MOVES = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
         (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2)]


class NoPath(Exception):
    """No valid plan exists for the request."""


class GoalBlocked(NoPath):
    """Goal cell is occupied, inflated, or inside an active no-go layer."""


class StartBlocked(NoPath):
    """Start cell is blocked at the query time (precondition violation)."""


class Unreachable(NoPath):
    """Free goal, but no connected route exists."""


@dataclass
class PathPlan:
    waypoints: list[Pose2D]
    length: float
    created_at: float
    cells: list[tuple[int, int]] = field(default_factory=list, repr=False)

    def goal(self) -> Pose2D:
        return self.waypoints[-1]


def _octile(ax: int, ay: int, bx: int, by: int) -> float:
    dx, dy = abs(ax - bx), abs(ay - by)
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def plan_path(stack: CostmapStack, start: Pose2D, goal: Pose2D,
              at_time: float = 0.0) -> PathPlan:
    """Shortest 8-connected path (diagonals cost sqrt(2)) at the given time.

    Raises StartBlocked / GoalBlocked / Unreachable, all subclasses of NoPath.
    """
    grid = stack.base
    blocked = stack.blocked_mask(at_time)
    s = grid.cell_of(start.x, start.y)
    g = grid.cell_of(goal.x, goal.y)
    if not grid.in_bounds_cell(*s) or blocked[s[1], s[0]]:
        raise StartBlocked(f"start cell {s} blocked at t={at_time}")
    if not grid.in_bounds_cell(*g) or blocked[g[1], g[0]]:
        raise GoalBlocked(f"goal cell {g} blocked at t={at_time}")

    nx, ny = grid.nx, grid.ny
    g_score: dict[tuple[int, int], float] = {s: 0.0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    open_heap: list[tuple[float, int, tuple[int, int]]] = []
    counter = 0
    heapq.heappush(open_heap, (_octile(*s, *g), counter, s))
    closed: set[tuple[int, int]] = set()

    while open_heap:
        _, _, cur = heapq.heappop(open_heap)
        if cur in closed:
            continue
        if cur == g:
            break
        closed.add(cur)
        cx, cy = cur
        base_g = g_score[cur]
        for dx, dy, cost in MOVES:
            nxx, nyy = cx + dx, cy + dy
            if not (0 <= nxx < nx and 0 <= nyy < ny) or blocked[nyy, nxx]:
                continue
            # forbid cutting corners diagonally between two blocked cells
            if dx and dy and blocked[cy, nxx] and blocked[nyy, cx]:
                continue
            cand = base_g + cost
            node = (nxx, nyy)
            if cand < g_score.get(node, math.inf) - 1e-12:
                g_score[node] = cand
                came[node] = cur
                counter += 1
                heapq.heappush(open_heap, (cand + _octile(nxx, nyy, *g), counter, node))
    else:
        raise Unreachable(f"no route from {s} to {g} at t={at_time}")

    if g not in g_score:
        raise Unreachable(f"no route from {s} to {g} at t={at_time}")

    cells = [g]
    while cells[-1] != s:
        cells.append(came[cells[-1]])
    cells.reverse()

    waypoints: list[Pose2D] = []
    for i, (ix, iy) in enumerate(cells):
        x, y = grid.center_of(ix, iy)
        if i + 1 < len(cells):
            nx2, ny2 = grid.center_of(*cells[i + 1])
            theta = math.atan2(ny2 - y, nx2 - x)
        else:
            theta = goal.theta
        waypoints.append(Pose2D(x, y, theta))
    return PathPlan(waypoints=waypoints, length=g_score[g] * grid.resolution,
                    created_at=at_time, cells=cells)
