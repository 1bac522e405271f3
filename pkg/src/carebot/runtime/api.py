"""HTTP gateway serving the operator interfaces.

Bearer tokens map to the two roles (operator, admin). Every mutating
endpoint is idempotent under retry with the same X-Request-Id header.
"""

from __future__ import annotations

import base64
import time
from collections import OrderedDict
from dataclasses import asdict

import numpy as np
from fastapi import Depends, FastAPI, Header, HTTPException, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from ..executive.calendar import CalendarEntry
from ..executive.requests import UnknownAction
from ..nav.costmap import VirtualLayer
from ..perception.thermal import TooFewSamples
from ..rules.parser import RuleSyntaxError
from .bus import encode_envelope
from .service import StackRuntime
from .supervisor import NodeDown, UnknownParam, set_param

MUTATING = {"POST", "PUT", "DELETE", "PATCH"}


class TeleopBody(BaseModel):
    v: float
    omega: float


class CalendarBody(BaseModel):
    entry_id: str
    action: str
    once_at: float | None = None
    daily_hhmm: str | None = None
    weekdays: list[int] | None = None
    enabled: bool = True
    expiry_s: float | None = None


class FaceBody(BaseModel):
    label: str
    vector: list[float]


class SkillBody(BaseModel):
    action: str


class ParamBody(BaseModel):
    key: str
    value: float | int | str | bool


class HolderBody(BaseModel):
    placed: bool


class BaselineBody(BaseModel):
    samples: list[float]


class ScreenBody(BaseModel):
    person: str


def create_api(runtime: StackRuntime, tokens: dict[str, str]) -> FastAPI:
    app = FastAPI(title="carebot gateway")
    idempotency: OrderedDict[str, tuple[int, bytes, str]] = OrderedDict()

    def role_of(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, "missing bearer token")
        role = tokens.get(authorization.removeprefix("Bearer ").strip())
        if role is None:
            raise HTTPException(401, "unknown token")
        return role

    def require_admin(role: str = Depends(role_of)) -> str:
        if role != "admin":
            raise HTTPException(403, "admin role required")
        return role

    def no_estop() -> None:
        if runtime.stack.world.robot.estop:
            raise HTTPException(409, "estop active")

    @app.middleware("http")
    async def idempotent_retry(request: Request, call_next):
        req_id = request.headers.get("X-Request-Id")
        if request.method in MUTATING and req_id:
            key = f"{request.method} {request.url.path} {req_id}"
            if key in idempotency:
                status, body, media = idempotency[key]
                return Response(content=body, status_code=status, media_type=media)
            response = await call_next(request)
            body = b"".join([chunk async for chunk in response.body_iterator])
            idempotency[key] = (response.status_code, body,
                                response.media_type or "application/json")
            while len(idempotency) > 1000:
                idempotency.popitem(last=False)
            return Response(content=body, status_code=response.status_code,
                            media_type=response.media_type,
                            headers=dict(response.headers))
        return await call_next(request)

    # -- status / map ---------------------------------------------------------

    @app.get("/whoami")
    def whoami(role: str = Depends(role_of)):
        return {"role": role}

    @app.get("/status")
    def status(role: str = Depends(role_of)):
        with runtime.lock:
            return runtime.status()

    @app.get("/map")
    def get_map(role: str = Depends(role_of)):
        grid = runtime.stack.costmap.base
        p = grid.probability()
        img = np.full(p.shape, 128, dtype=np.uint8)
        img[p > 0.65] = 0
        img[p < 0.35] = 255
        return {"width": grid.nx, "height": grid.ny,
                "resolution": grid.resolution,
                "origin": [grid.origin.x, grid.origin.y, grid.origin.theta],
                "encoding": "occ8",
                "data": base64.b64encode(img.tobytes()).decode()}

    @app.get("/map/layers")
    def get_layers(role: str = Depends(role_of)):
        return [l.to_dict() for l in runtime.stack.costmap.layers]

    @app.put("/map/layers")
    def put_layers(layers: list[dict], role: str = Depends(role_of)):
        try:
            parsed = [VirtualLayer.from_dict(d) for d in layers]
        except (KeyError, ValueError, TypeError) as e:
            raise HTTPException(422, f"bad layer document: {e}")
        with runtime.lock:
            runtime.stack.costmap.layers = parsed
            runtime.stack.costmap.invalidate()
        return {"count": len(parsed)}

    # -- teleop / estop ----------------------------------------------------------

    @app.post("/teleop")
    def teleop(body: TeleopBody, role: str = Depends(role_of), _=Depends(no_estop)):
        with runtime.lock:
            ex = runtime.stack.executive
            current = ex.current_action()
            if current is None or not current.startswith("teleop"):
                try:
                    ex.submit_manual("teleop")
                except UnknownAction:
                    pass
            runtime.stack.ops.set_teleop(body.v, body.omega)
        return {"ok": True, "deadline": runtime.stack.ops.teleop_deadline}

    @app.post("/estop")
    def estop_on(role: str = Depends(role_of)):
        with runtime.lock:
            runtime.stack.world.robot.estop = True
            runtime.stack.executive.engage_estop()
            runtime.emit("robot/estop", {"engaged": True})
        return {"estop": True}

    @app.delete("/estop")
    def estop_off(role: str = Depends(role_of)):
        with runtime.lock:
            runtime.stack.world.robot.estop = False
            runtime.stack.executive.release_estop()
            runtime.emit("robot/estop", {"engaged": False})
        return {"estop": False}

    # -- calendar ------------------------------------------------------------------

    @app.get("/calendar")
    def calendar_list(role: str = Depends(role_of)):
        store = runtime.stack.executive.calendar
        return [asdict(e) for e in store.list()] if store else []

    def _upsert(body: CalendarBody):
        store = runtime.stack.executive.calendar
        if store is None:
            raise HTTPException(409, "no calendar store configured")
        try:
            entry = CalendarEntry(**body.model_dump())
        except ValueError as e:
            raise HTTPException(422, str(e))
        with runtime.lock:
            store.upsert(entry)
        return asdict(entry)

    @app.post("/calendar")
    def calendar_create(body: CalendarBody, role: str = Depends(role_of)):
        return _upsert(body)

    @app.put("/calendar/{entry_id}")
    def calendar_update(entry_id: str, body: CalendarBody,
                        role: str = Depends(role_of)):
        if entry_id != body.entry_id:
            raise HTTPException(422, "entry_id mismatch")
        return _upsert(body)

    @app.delete("/calendar/{entry_id}")
    def calendar_delete(entry_id: str, role: str = Depends(role_of)):
        store = runtime.stack.executive.calendar
        with runtime.lock:
            if store is None or not store.delete(entry_id):
                raise HTTPException(404, f"no calendar entry {entry_id!r}")
        return {"deleted": entry_id}

    # -- nodes ------------------------------------------------------------------------

    @app.get("/nodes")
    def nodes(role: str = Depends(role_of)):
        return runtime.registry.summary()

    @app.post("/nodes/{name}/params")
    def node_param(name: str, body: ParamBody, role: str = Depends(require_admin)):
        try:
            with runtime.lock:
                return set_param(runtime.registry, name, body.key, body.value,
                                 now=runtime.stack.world.clock)
        except NodeDown as e:
            raise HTTPException(409, str(e))
        except UnknownParam as e:
            raise HTTPException(422, str(e))
        except (OSError, RuleSyntaxError) as e:
            raise HTTPException(422, f"parameter rejected: {e}")

    @app.post("/nodes/{name}/{verb}")
    def node_verb(name: str, verb: str, role: str = Depends(require_admin)):
        rec = runtime.registry.get(name)
        if rec is None:
            raise HTTPException(404, f"no node {name!r}")
        if verb not in ("start", "stop", "restart"):
            raise HTTPException(422, f"unknown verb {verb!r}")
        now = runtime.stack.world.clock
        with runtime.lock:
            if verb in ("stop", "restart"):
                runtime.registry.stop(name)
            if verb in ("start", "restart"):
                runtime.alive[name] = True
                runtime.registry.start(name, now)
        return rec.summary()

    # -- logs ------------------------------------------------------------------------

    @app.get("/logs")
    def logs(since: int = 0, limit: int = 500, role: str = Depends(role_of)):
        return runtime.log.read(since_offset=since, limit=min(limit, 2000))

    # -- faces --------------------------------------------------------------------------

    @app.post("/faces")
    def faces_add(body: FaceBody, role: str = Depends(require_admin)):
        entry = runtime.faces.add(body.label, body.vector,
                                  created_at=runtime.stack.world.clock)
        return {"label": entry.label, "encoding": entry.encoding}

    @app.get("/faces")
    def faces_list(role: str = Depends(role_of)):
        return runtime.faces.list()

    # -- ebt ----------------------------------------------------------------------------

    @app.get("/ebt/alerts")
    def ebt_alerts(role: str = Depends(role_of)):
        return runtime.ebt_alerts

    @app.post("/ebt/alerts/{index}/ack")
    def ebt_ack(index: int, role: str = Depends(role_of)):
        if not 0 <= index < len(runtime.ebt_alerts):
            raise HTTPException(404, "no such alert")
        runtime.ebt_alerts[index]["ack"] = True
        return runtime.ebt_alerts[index]

    @app.post("/ebt/baseline")
    def ebt_baseline(body: BaselineBody, role: str = Depends(role_of)):
        try:
            b = runtime.calibrate_ebt(body.samples)
        except TooFewSamples as e:
            raise HTTPException(422, str(e))
        return {"mean": b.mean, "stddev": b.stddev, "n": b.n}

    @app.post("/ebt/screen")
    def ebt_screen(body: ScreenBody, role: str = Depends(role_of)):
        try:
            with runtime.lock:
                return runtime.screen_person(body.person)
        except KeyError:
            raise HTTPException(404, f"no person {body.person!r}")

    # -- skills / holder ----------------------------------------------------------------

    @app.post("/skills")
    def trigger_skill(body: SkillBody, role: str = Depends(role_of),
                      _=Depends(no_estop)):
        try:
            with runtime.lock:
                req = runtime.stack.executive.submit_manual(body.action)
        except (UnknownAction, RuleSyntaxError) as e:
            raise HTTPException(422, str(e))
        return {"action": str(req.action), "priority": req.effective_priority}

    @app.post("/holder")
    def holder(body: HolderBody, role: str = Depends(role_of)):
        runtime.stack.ops.holder_placed_flag = body.placed
        runtime.emit("skill/holder", {"placed": body.placed})
        return {"placed": body.placed}

    # -- event stream ----------------------------------------------------------------------

    @app.get("/events")
    def events(pattern: str | None = None, limit: int = 0,
               idle_timeout: float = 0.0, role: str = Depends(role_of)):
        """Chunked NDJSON of bus envelopes. limit/idle_timeout bound the
        stream for polling clients; both 0 means stream forever."""
        sub = runtime.bus.subscribe(pattern)

        def stream():
            sent = 0
            idle = 0.0
            try:
                while True:
                    got = sub.pull_wait(0.2)
                    for env in got:
                        yield encode_envelope(env)
                        sent += 1
                        if limit and sent >= limit:
                            return
                    if got:
                        idle = 0.0
                    else:
                        idle += 0.2
                        if idle_timeout and idle >= idle_timeout:
                            return
                        time.sleep(0.01)
            finally:
                runtime.bus.unsubscribe(sub)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    return app
