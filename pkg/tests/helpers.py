"""Shared test harnesses: planning oracle, MCL trial rig, toy facilities."""

from __future__ import annotations

import heapq
import math

import numpy as np

from carebot.geometry import Pose2D
from carebot.nav.costmap import CostmapStack
from carebot.nav.mapping import OccupancyGrid
from carebot.nav.mcl import LikelihoodField, MclConfig, ParticleSet, estimate, mcl_step
from carebot.simworld.world import FacilityWorld, GroundGrid, RobotBody

SQRT2 = math.sqrt(2.0)
ORACLE_MOVES = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
                (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2)]


def dijkstra_cost(blocked: np.ndarray, start: tuple[int, int],
                  goal: tuple[int, int]) -> float | None:
    """Independent shortest-path oracle over the same 8-connected move set
    (diagonals sqrt(2), no corner cutting between two blocked cells)."""
    ny, nx = blocked.shape
    dist = {start: 0.0}
    pq: list[tuple[float, tuple[int, int]]] = [(0.0, start)]
    seen: set[tuple[int, int]] = set()
    while pq:
        d, cur = heapq.heappop(pq)
        if cur in seen:
            continue
        seen.add(cur)
        if cur == goal:
            return d
        x, y = cur
        for dx, dy, c in ORACLE_MOVES:
            x2, y2 = x + dx, y + dy
            if not (0 <= x2 < nx and 0 <= y2 < ny) or blocked[y2, x2]:
                continue
            if dx and dy and blocked[y, x2] and blocked[y2, x]:
                continue
            nd = d + c
            if nd < dist.get((x2, y2), math.inf):
                dist[(x2, y2)] = nd
                heapq.heappush(pq, (nd, (x2, y2)))
    return None


def random_grid_case(rng: np.random.Generator, n: int = 15, p_occ: float = 0.25):
    """Random n-by-n bool grid plus free start/goal cells."""
    blocked = rng.random((n, n)) < p_occ
    free = np.argwhere(~blocked)
    si, gi = rng.choice(len(free), size=2, replace=False)
    start = (int(free[si][1]), int(free[si][0]))
    goal = (int(free[gi][1]), int(free[gi][0]))
    return blocked, start, goal


def toy_facility_world(seed: int = 0) -> FacilityWorld:
    """20x10 m facility with interior walls, asymmetric enough to localize in."""
    grid = GroundGrid.empty_room(20.0, 10.0)
    grid.mark_rect(5.0, 0.0, 5.2, 6.0)
    grid.mark_rect(10.0, 4.0, 10.2, 10.0)
    grid.mark_rect(14.0, 0.0, 14.2, 3.5)
    grid.mark_rect(15.5, 7.0, 18.0, 7.2)
    robot = RobotBody(pose=Pose2D(2.0, 2.0, 0.0))
    return FacilityWorld(grid=grid, robot=robot, dock=Pose2D(1.0, 1.0, 0.0), seed=seed)


def believed_map(world: FacilityWorld) -> OccupancyGrid:
    return OccupancyGrid.from_bool(world.grid.occupied, world.grid.resolution)


def drive_tape(n_steps: int = 30):
    """Deterministic drive commands for MCL trials: arcs through the facility."""
    cmds = []
    for i in range(n_steps):
        v = 0.6 if i % 10 < 7 else 0.3
        om = 0.4 if 8 <= i < 16 else (-0.3 if 20 <= i < 26 else 0.0)
        cmds.append((v, om))
    return cmds


def mcl_sensor_tape(world: FacilityWorld, cmds, dt: float = 0.5):
    """Ground-truth trajectory + scans for a command tape (shared across trials)."""
    from carebot.simworld.world import DriveCmd, step

    poses = []
    scans = []
    for v, om in cmds:
        for _ in range(int(dt / 0.05)):
            step(world, DriveCmd(v, om), 0.05)
        poses.append(world.robot.pose)
        scans.append(world.lidar_scan())
    return poses, scans


def run_mcl_trial(seed: int, start_pose: Pose2D, poses, scans,
                  lfield: LikelihoodField, cfg: MclConfig | None = None) -> float:
    """One seeded filter run over a fixed sensor tape; returns final position error."""
    cfg = cfg or MclConfig()
    rng = np.random.default_rng(seed)
    init = Pose2D(start_pose.x + rng.normal(0, 0.2), start_pose.y + rng.normal(0, 0.2),
                  start_pose.theta + rng.normal(0, 0.1))
    ps = ParticleSet.gaussian(init, 0.3, 0.15, 500, rng, cfg.n_min, cfg.n_max)
    prev = start_pose
    for truth, scan in zip(poses, scans):
        delta = truth.delta_from(prev)
        noisy = Pose2D(delta.x + rng.normal(0, 0.01), delta.y + rng.normal(0, 0.01),
                       delta.theta + rng.normal(0, 0.005))
        ps = mcl_step(ps, noisy, scan, lfield, rng, cfg)
        prev = truth
    est = estimate(ps)
    return est.distance_to(poses[-1])


def stack_for(world: FacilityWorld, inflation: float | None = None) -> CostmapStack:
    kw = {} if inflation is None else {"inflation_radius": inflation}
    return CostmapStack(believed_map(world), **kw)


def exec_world(**kwargs):
    """12x8 m facility for executive tests: rooms, dock, inventory, markers,
    a door, and a compliant person."""
    from carebot.geometry import Pose2D
    from carebot.simworld.world import Door, InventorySlot, Marker, Person

    grid = GroundGrid.empty_room(12.0, 8.0)
    grid.mark_rect(6.0, 0.0, 6.15, 3.0)      # partial wall; 5 m opening above
    robot = RobotBody(pose=Pose2D(2.0, 2.0, 0.0))
    world = FacilityWorld(
        grid=grid, robot=robot, dock=Pose2D(1.2, 6.8, 0.0),
        doors=[Door(name="room3_door", pose=Pose2D(9.0, 1.5, 1.5707963), width=0.9,
                    open=False, marker_id=11)],
        people=[Person(name="resident", pose=Pose2D(10.8, 5.2, 3.14),
                       retreat=(10.8, 7.2))],
        markers=[Marker(11, Pose2D(9.0, 1.8, 0.0), kind="door_handle"),
                 Marker(21, Pose2D(4.0, 6.0, 0.0), kind="disinfect")],
        inventory=[InventorySlot("slot_a", "bottle"), InventorySlot("slot_b", "bottle"),
                   InventorySlot("slot_c", None), InventorySlot("slot_d", None)],
        rooms={"ward_a": Pose2D(10.2, 3.2, 0.0), "reception": Pose2D(2.0, 2.0, 0.0),
               "lounge": Pose2D(10.0, 6.5, 0.0), "room3": Pose2D(8.0, 1.5, 0.0),
               "handrail": Pose2D(4.0, 5.4, 1.57)},
        seed=kwargs.pop("seed", 7),
    )
    return world


def make_stack(world=None, motion="drive", rules_text="", calendar=None, config=None):
    from carebot.app import Stack
    from carebot.rules.parser import parse

    events = []

    def emit(topic, payload):
        events.append((topic, payload))

    stack = Stack(world or exec_world(), rulebase=parse(rules_text),
                  calendar=calendar, motion=motion, emit_fn=emit, config=config)
    stack.events = events
    return stack


# -- rule-engine oracle and random program generator ---------------------------

def naive_closure(rb, facts, universe):
    """Brute-force oracle: enumerate every substitution over the universe and
    apply all rules to a fixpoint, stratum by stratum. Independent of the
    engine's semi-naive join machinery."""
    import itertools

    from carebot.rules.engine import _cmp_holds
    from carebot.rules.parser import Cmp, Neg, Pos
    from carebot.rules.terms import predicate_of, substitute, term_vars

    db = set(facts)
    max_s = max(rb.strata.values(), default=0)
    for s in range(max_s + 1):
        rules = [r for r in rb.rules if rb.strata.get(predicate_of(r.head), 0) == s]
        changed = True
        while changed:
            changed = False
            for rule in rules:
                vs_set = term_vars(rule.head)
                for l in rule.body:
                    if isinstance(l, (Pos, Neg)):
                        vs_set |= term_vars(l.term)
                    else:
                        vs_set |= term_vars(l.left) | term_vars(l.right)
                vs = sorted(vs_set)
                assignments = itertools.product(universe, repeat=len(vs)) if vs else [()]
                for combo in assignments:
                    binding = dict(zip(vs, combo))
                    ok = True
                    for lit in rule.body:
                        if isinstance(lit, Pos):
                            if substitute(lit.term, binding) not in db:
                                ok = False
                                break
                        elif isinstance(lit, Neg):
                            if substitute(lit.term, binding) in db:
                                ok = False
                                break
                        else:
                            if not _cmp_holds(lit, binding):
                                ok = False
                                break
                    if ok:
                        head = substitute(rule.head, binding)
                        if head not in db:
                            db.add(head)
                            changed = True
    return db


def random_rule_program(rng) -> tuple[str, list, list]:
    """Seeded random stratified program: rule text, base facts, universe."""
    from carebot.rules.terms import Atom, Num

    consts = ["a", "b", "c"]
    nums = [1, 2]
    universe = [Atom(c) for c in consts] + [Num(float(v)) for v in nums]
    tiers = [["e0", "e1"], ["m0", "m1"], ["t0"]]
    arity = {p: int(rng.integers(1, 3)) for tier in tiers for p in tier}

    def rand_const():
        return str(rng.choice(consts)) if rng.random() < 0.7 else str(int(rng.choice(nums)))

    def rand_args(pred, pool):
        out = []
        for _ in range(arity[pred]):
            if pool and rng.random() < 0.7:
                out.append(str(rng.choice(pool)))
            else:
                out.append(rand_const())
        return out

    lines = []
    n_rules = int(rng.integers(1, 7))
    for _ in range(n_rules):
        tier_i = int(rng.integers(0, 3))
        head_pred = str(rng.choice(tiers[tier_i]))
        n_pos = int(rng.integers(1, 3))
        body = []
        bound = []
        for _ in range(n_pos):
            src_tier = int(rng.integers(0, tier_i + 1))
            p = str(rng.choice(tiers[src_tier]))
            args = []
            for _ in range(arity[p]):
                if rng.random() < 0.6:
                    v = str(rng.choice(["X", "Y"]))
                    args.append(v)
                    bound.append(v)
                else:
                    args.append(rand_const())
            body.append(f"{p}({', '.join(args)})")
        if tier_i > 0 and rng.random() < 0.4:
            src_tier = int(rng.integers(0, tier_i))
            p = str(rng.choice(tiers[src_tier]))
            body.append(f"not {p}({', '.join(rand_args(p, bound))})")
        if bound and rng.random() < 0.3:
            op = str(rng.choice(["<", ">", "<=", ">=", "!="]))
            body.append(f"{rng.choice(bound)} {op} {int(rng.choice(nums))}")
        head_args = rand_args(head_pred, bound)
        lines.append(f"{head_pred}({', '.join(head_args)}) :- {', '.join(body)}.")

    from carebot.rules.terms import Struct
    facts = []
    n_facts = int(rng.integers(1, 13))
    for _ in range(n_facts):
        p = str(rng.choice(tiers[0] + (tiers[1] if rng.random() < 0.3 else [])))
        args = tuple(universe[int(rng.integers(0, len(universe)))]
                     for _ in range(arity[p]))
        facts.append(Struct(p, args))
    return "\n".join(lines) + "\n", facts, universe
