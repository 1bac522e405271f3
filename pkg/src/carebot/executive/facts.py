"""Fact-snapshot vocabulary published to the decision engine each tick.

Standard interface: battery_level/1, robot_at/1, time_of_day/1 (minutes),
person_near/0, skill_running/1, inventory_has/2, holder_placed/0, idle/0.
"""

from __future__ import annotations

import math

from ..rules.terms import Atom, Num, Struct, Term
from ..simworld.world import FacilityWorld

ROOM_AT_RADIUS = 0.8


def build_facts(world: FacilityWorld, running_skill: str | None = None,
                holder_placed: bool = False,
                person_radius: float = 2.0) -> list[Term]:
    facts: list[Term] = [
        Struct("battery_level", (Num(round(world.robot.battery, 4)),)),
        Struct("time_of_day", (Num(float(int((world.clock / 60.0) % 1440))),)),
    ]
    rp = world.robot.pose
    for name, pose in world.rooms.items():
        if math.hypot(pose.x - rp.x, pose.y - rp.y) <= ROOM_AT_RADIUS:
            facts.append(Struct("robot_at", (Atom(name),)))
            break
    if any(math.hypot(p.pose.x - rp.x, p.pose.y - rp.y) <= person_radius
           for p in world.people):
        facts.append(Atom("person_near"))
    if running_skill:
        facts.append(Struct("skill_running", (Atom(running_skill),)))
    else:
        facts.append(Atom("idle"))
    for slot in world.inventory:
        if slot.item is not None:
            facts.append(Struct("inventory_has", (Atom(slot.name), Atom(slot.item))))
    if holder_placed:
        facts.append(Atom("holder_placed"))
    if world.robot.docked:
        facts.append(Atom("docked"))
    return facts
