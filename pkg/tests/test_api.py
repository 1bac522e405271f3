import json

import pytest
from fastapi.testclient import TestClient

from carebot.geometry import Pose2D
from carebot.runtime.api import create_api
from carebot.runtime.service import StackRuntime

import helpers

TOKENS = {"op-token": "operator", "adm-token": "admin"}
OP = {"Authorization": "Bearer op-token"}
ADM = {"Authorization": "Bearer adm-token"}


@pytest.fixture()
def rt(tmp_path):
    from carebot.executive.calendar import CalendarStore

    stack = helpers.make_stack(calendar=CalendarStore(tmp_path / "cal.json"))
    runtime = StackRuntime(stack, tmp_path / "logs", salt=b"apitest")
    return runtime


@pytest.fixture()
def client(rt):
    return TestClient(create_api(rt, TOKENS), raise_server_exceptions=False)


class TestAuth:
    def test_missing_token_401(self, client):
        assert client.get("/status").status_code == 401

    def test_unknown_token_401(self, client):
        r = client.get("/status", headers={"Authorization": "Bearer nope"})
        assert r.status_code == 401

    def test_operator_cannot_admin(self, client):
        r = client.post("/nodes/navigation/stop", headers=OP)
        assert r.status_code == 403

    def test_admin_can_admin(self, client):
        r = client.post("/nodes/navigation/stop", headers=ADM)
        assert r.status_code == 200


class TestStatus:
    def test_fresh_sim(self, client):
        r = client.get("/status", headers=OP)
        assert r.status_code == 200
        body = r.json()
        assert body["battery"] == 1.0
        assert body["current_action"] is None
        assert body["nodes_summary"]["navigation"] == "running"

    def test_map_payload(self, client, rt):
        r = client.get("/map", headers=OP)
        assert r.status_code == 200
        body = r.json()
        grid = rt.stack.costmap.base
        assert body["width"] == grid.nx and body["height"] == grid.ny
        import base64
        raw = base64.b64decode(body["data"])
        assert len(raw) == grid.nx * grid.ny


class TestTeleop:
    def test_moves_then_deadman_stops(self, client, rt):
        pose0 = rt.stack.world.robot.pose
        assert client.post("/teleop", json={"v": 0.5, "omega": 0.0},
                           headers=OP).status_code == 200
        rt.run_for(0.4)
        moved = rt.stack.world.robot.pose.distance_to(pose0)
        assert moved > 0.05
        # no renewal for 600 ms: the platform must be stopped again
        rt.run_for(0.6)
        pose1 = rt.stack.world.robot.pose
        rt.run_for(0.3)
        assert rt.stack.world.robot.pose.distance_to(pose1) < 1e-6

    def test_renewal_keeps_moving(self, client, rt):
        pose0 = rt.stack.world.robot.pose
        for _ in range(4):
            client.post("/teleop", json={"v": 0.5, "omega": 0.0}, headers=OP)
            rt.run_for(0.3)
        assert rt.stack.world.robot.pose.distance_to(pose0) > 0.4


class TestEstop:
    def test_estop_freezes_and_blocks_motion_endpoints(self, client, rt):
        client.post("/teleop", json={"v": 0.5, "omega": 0.0}, headers=OP)
        rt.run_for(0.3)
        assert client.post("/estop", headers=OP).status_code == 200
        pose0 = rt.stack.world.robot.pose
        client.post("/teleop", json={"v": 1.0, "omega": 0.0}, headers=OP)
        assert client.post("/teleop", json={"v": 1.0, "omega": 0.0},
                           headers=OP).status_code == 409
        assert client.post("/skills", json={"action": "charge"},
                           headers=OP).status_code == 409
        rt.run_for(1.0)
        assert rt.stack.world.robot.pose == pose0
        assert client.get("/status", headers=OP).json()["estop"] is True

        assert client.delete("/estop", headers=OP).status_code == 200
        assert client.post("/skills", json={"action": "charge"},
                           headers=OP).status_code == 200


class TestCalendar:
    ENTRY = {"entry_id": "lunch", "action": "remind(room3, lunch)",
             "daily_hhmm": "00:01", "weekdays": None, "once_at": None,
             "enabled": True, "expiry_s": None}

    def test_crud_round_trip_and_fires(self, client, rt):
        assert client.get("/calendar", headers=OP).json() == []
        r = client.post("/calendar", json=self.ENTRY, headers=OP)
        assert r.status_code == 200
        listed = client.get("/calendar", headers=OP).json()
        assert len(listed) == 1 and listed[0]["entry_id"] == "lunch"

        # fires at 00:01 sim time
        rt.run_for(61.0)
        assert (rt.stack.executive.current_action() or "").startswith("remind")

        upd = dict(self.ENTRY, enabled=False)
        assert client.put("/calendar/lunch", json=upd, headers=OP).status_code == 200
        assert client.get("/calendar", headers=OP).json()[0]["enabled"] is False
        assert client.delete("/calendar/lunch", headers=OP).status_code == 200
        assert client.get("/calendar", headers=OP).json() == []
        assert client.delete("/calendar/lunch", headers=OP).status_code == 404

    def test_validation_422(self, client):
        bad = dict(self.ENTRY, daily_hhmm="25:99")
        assert client.post("/calendar", json=bad, headers=OP).status_code == 422
        both = dict(self.ENTRY, once_at=10.0)
        assert client.post("/calendar", json=both, headers=OP).status_code == 422


class TestIdempotency:
    def test_same_request_id_not_reexecuted(self, client, rt):
        h = dict(OP, **{"X-Request-Id": "abc-1"})
        r1 = client.post("/skills", json={"action": "entertain(lounge)"}, headers=h)
        r2 = client.post("/skills", json={"action": "entertain(lounge)"}, headers=h)
        assert r1.status_code == r2.status_code == 200
        assert r1.json() == r2.json()
        queued = len(rt.stack.executive.queue)
        running = rt.stack.executive.current_action() is not None
        assert queued + (1 if running else 0) == 1

    def test_different_request_id_executes_again(self, client, rt):
        client.post("/skills", json={"action": "entertain(lounge)"},
                    headers=dict(OP, **{"X-Request-Id": "a"}))
        client.post("/skills", json={"action": "entertain(lounge)"},
                    headers=dict(OP, **{"X-Request-Id": "b"}))
        total = len(rt.stack.executive.queue) + \
            (1 if rt.stack.executive.current_action() else 0)
        assert total == 2


class TestLayers:
    def test_put_layers_blocks_planning(self, client, rt):
        layers = [{"label": "night box", "windows": ["22:00-06:00"],
                   "polygon": [[9.0, 5.5], [11.5, 5.5], [11.5, 7.5], [9.0, 7.5]]}]
        assert client.put("/map/layers", json=layers, headers=OP).status_code == 200
        assert len(rt.stack.costmap.layers) == 1
        at_23h = 23 * 3600.0
        at_noon = 12 * 3600.0
        assert rt.stack.costmap.blocked_point(10.0, 6.5, at_23h)
        assert not rt.stack.costmap.blocked_point(10.0, 6.5, at_noon)
        got = client.get("/map/layers", headers=OP).json()
        assert got[0]["windows"] == ["22:00-06:00"]

    def test_bad_layer_422(self, client):
        assert client.put("/map/layers", json=[{"nope": 1}],
                          headers=OP).status_code == 422


class TestNodes:
    def test_param_changes_follow_behavior(self, client, rt):
        assert rt.stack.ops.follow_cfg.lookahead == pytest.approx(0.5)
        r = client.post("/nodes/navigation/params",
                        json={"key": "lookahead", "value": 0.6}, headers=ADM)
        assert r.status_code == 200
        assert rt.stack.ops.follow_cfg.lookahead == pytest.approx(0.6)

    def test_unknown_param_422_nodedown_409(self, client):
        r = client.post("/nodes/navigation/params",
                        json={"key": "warp", "value": 9}, headers=ADM)
        assert r.status_code == 422
        client.post("/nodes/navigation/stop", headers=ADM)
        r = client.post("/nodes/navigation/params",
                        json={"key": "lookahead", "value": 0.7}, headers=ADM)
        assert r.status_code == 409

    def test_rules_hot_reload(self, client, rt, tmp_path):
        rules = tmp_path / "night.rules"
        rules.write_text("propose(charge, 20) :- idle.\n")
        r = client.post("/nodes/executive/params",
                        json={"key": "rules_file", "value": str(rules)}, headers=ADM)
        assert r.status_code == 200
        assert len(rt.stack.executive.rulebase.rules) == 1

    def test_rules_reload_syntax_error_422(self, client, tmp_path):
        rules = tmp_path / "broken.rules"
        rules.write_text("propose(charge, :- idle.\n")
        r = client.post("/nodes/executive/params",
                        json={"key": "rules_file", "value": str(rules)}, headers=ADM)
        assert r.status_code == 422


class TestFacesApi:
    def test_one_way_and_admin_only(self, client):
        vec = [0.25, 0.5, 0.75]
        assert client.post("/faces", json={"label": "alice", "vector": vec},
                           headers=OP).status_code == 403
        r = client.post("/faces", json={"label": "alice", "vector": vec}, headers=ADM)
        assert r.status_code == 200
        enc = r.json()["encoding"]
        assert enc and str(vec) not in enc
        listed = client.get("/faces", headers=OP).json()
        assert listed[0]["label"] == "alice"
        assert "vector" not in listed[0]
        dump = json.dumps(listed)
        assert "0.25" not in dump and "0.75" not in dump


class TestEbtApi:
    def test_screen_elevated_person_raises_alert(self, client, rt):
        rt.stack.world.people[0].body_temp_k = 310.5     # +1.5 K over baseline
        r = client.post("/ebt/screen", json={"person": "resident"}, headers=OP)
        assert r.status_code == 200
        assert r.json()["elevated"] is True
        rt.tick()
        alerts = client.get("/ebt/alerts", headers=OP).json()
        assert len(alerts) == 1 and alerts[0]["ack"] is False
        r = client.post("/ebt/alerts/0/ack", headers=OP)
        assert r.json()["ack"] is True

    def test_screen_normal_no_alert(self, client, rt):
        rt.stack.world.people[0].body_temp_k = 309.0
        r = client.post("/ebt/screen", json={"person": "resident"}, headers=OP)
        assert r.json()["elevated"] is False
        rt.tick()
        assert client.get("/ebt/alerts", headers=OP).json() == []

    def test_baseline_endpoint(self, client):
        r = client.post("/ebt/baseline", json={"samples": [309.0] * 12}, headers=OP)
        assert r.status_code == 200
        assert r.json()["stddev"] == pytest.approx(0.1)
        r = client.post("/ebt/baseline", json={"samples": [309.0] * 5}, headers=OP)
        assert r.status_code == 422


class TestLogsApi:
    def test_paging(self, client, rt):
        for i in range(8):
            rt.log.append(float(i), {"topic": "skill/events", "i": i})
        r = client.get("/logs?since=0&limit=5", headers=OP).json()
        assert len(r["entries"]) == 5
        r2 = client.get(f"/logs?since={r['next']}", headers=OP).json()
        assert len(r2["entries"]) == 3


class TestEvents:
    def test_bounded_stream_delivers_envelopes(self, client, rt):
        import threading
        import time as wall

        def tick_later():
            # let the request establish its subscription first
            wall.sleep(0.5)
            rt.run_for(3.0)

        ticker = threading.Thread(target=tick_later)
        ticker.start()
        try:
            r = client.get("/events?pattern=robot/**&limit=3&idle_timeout=8",
                           headers=OP)
        finally:
            ticker.join()
        lines = [l for l in r.text.splitlines() if l.strip()]
        assert len(lines) == 3
        for line in lines:
            doc = json.loads(line)
            assert doc["topic"].startswith("robot/")
            assert "seq" in doc and "stamp" in doc
