"""Control service: drives an interactive simulation in paced real time and
exposes the attacker console API over a WebSocket channel plus matching
HTTP request/response endpoints."""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from . import mitm as mitm_mod
from .harness import World, build_world
from .scenario import ScenarioConfig, _parse_rule


class PortUnavailable(Exception):
    pass


class _Subscriber:
    def __init__(self) -> None:
        self.outbox: "queue.Queue[dict]" = queue.Queue()


class ControlService:
    """Owns the simulation thread. All domain mutation happens on that
    thread; clients talk to it through the command queue only."""

    def __init__(self, config: ScenarioConfig, time_scale: float = 1.0):
        self.config = config
        self.time_scale = time_scale
        self.world: World = build_world(config, auto_start_mitm=False, force_attacker=True)
        self._commands: "queue.Queue[tuple[Optional[_Subscriber], dict]]" = queue.Queue()
        self._subscribers: list[_Subscriber] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, name="blelab-sim", daemon=True)
        self._wire_hooks()

    # --- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5)

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber()
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def submit(self, message: dict, sub: Optional[_Subscriber] = None) -> None:
        self._commands.put((sub, message))

    def request(self, message: dict, timeout: float = 5.0) -> dict:
        """Synchronous command: returns the ack/error for this message."""
        sub = _Subscriber()
        self.submit(message, sub)
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            try:
                reply = sub.outbox.get(timeout=0.05)
            except queue.Empty:
                continue
            if reply.get("type") in ("ack", "error"):
                return reply
        return {"type": "error", "message": "timed out waiting for the simulation loop"}

    # --- event fan-out -----------------------------------------------------

    def _broadcast(self, message: dict) -> None:
        with self._lock:
            subs = list(self._subscribers)
        for sub in subs:
            sub.outbox.put(message)

    def _wire_hooks(self) -> None:
        central = self.world.central
        central.on_rssi = lambda t, dbm: self._broadcast(
            {"type": "rssi", "time_ms": t, "dbm": round(dbm, 2)}
        )
        central.on_alert = lambda alert: self._broadcast(
            {"type": "alert", "kind": alert.kind.value, "time_ms": alert.time_ms,
             "score": round(alert.score, 4)}
        )
        attacker = self.world.attacker
        if attacker is not None:
            attacker.on_journal = lambda entry: self._broadcast(
                {"type": "op", "held": False, **entry.to_record()}
            )
            attacker.on_held = lambda held: self._broadcast(
                {
                    "type": "op",
                    "held": True,
                    "op_id": held.op_id,
                    "time_ms": self.world.net.now_ms,
                    "direction": held.direction.value,
                    "uuid": str(held.op.target_uuid),
                    "before_hex": held.op.payload.hex(),
                    "deadline_ms": held.deadline_ms,
                }
            )

    # --- roster ------------------------------------------------------------

    def device_roster(self) -> list[dict]:
        attacker = self.world.attacker
        fake_ids = set()
        if attacker is not None:
            fake_ids.add(attacker.core.id)
            if attacker.fake is not None:
                fake_ids.add(attacker.fake.id)
        last_rssi: dict[str, float] = {}
        for record in self.world.net.event_log:
            if record["rssi_dbm"] is not None:
                last_rssi[record["sender"]] = record["rssi_dbm"]
        roster = []
        for device_id in sorted(self.world.net.devices):
            device = self.world.net.devices[device_id]
            roster.append(
                {
                    "id": device.id,
                    "name": getattr(device, "adv_data", b"").decode("latin1")
                    or device.id,
                    "address": device.address,
                    "is_fake": device.id in fake_ids,
                    "rssi": last_rssi.get(device.id),
                }
            )
        return roster

    # --- command execution (simulation thread only) -------------------------

    def _handle(self, sub: Optional[_Subscriber], msg: dict) -> None:
        def reply(message: dict) -> None:
            if sub is not None:
                sub.outbox.put(message)

        try:
            kind = msg.get("type")
            attacker = self.world.attacker
            if kind == "list_devices":
                for entry in self.device_roster():
                    reply({"type": "device", **entry})
                reply({"type": "ack", "of": "list_devices"})
            elif kind == "start_mitm":
                assert attacker is not None
                target = msg.get("target", attacker.session.target_id)
                if target != attacker.session.target_id:
                    raise mitm_mod.MitmError(f"unknown target {target!r}")
                if attacker.session.state is mitm_mod.SessionState.CLONING:
                    attacker.clone_target(self.world.peripheral.db)
                    self._wire_hooks()
                attacker.start_session()
                self.world.mitm_started = True
                reply({"type": "ack", "of": "start_mitm",
                       "state": attacker.session.state.value})
            elif kind == "stop_mitm":
                assert attacker is not None
                attacker.stop_session()
                reply({"type": "ack", "of": "stop_mitm",
                       "state": attacker.session.state.value})
            elif kind == "set_rules":
                assert attacker is not None
                errors: list[str] = []
                rules = [_parse_rule(r, errors) for r in msg.get("rules", [])]
                if errors:
                    raise ValueError("; ".join(errors))
                attacker.session.rules = rules
                reply({"type": "ack", "of": "set_rules", "count": len(rules)})
            elif kind == "set_manual":
                assert attacker is not None
                attacker.session.manual_mode = bool(msg.get("on", False))
                reply({"type": "ack", "of": "set_manual",
                       "on": attacker.session.manual_mode})
            elif kind == "decision":
                assert attacker is not None
                data = None
                if msg.get("bytes_hex") is not None:
                    data = bytes.fromhex(msg["bytes_hex"])
                entry = attacker.operator_decision(
                    int(msg["op_id"]), msg.get("action", "forward"), data
                )
                reply({"type": "ack", "of": "decision", "op_id": entry.op_id,
                       "decision": entry.decision})
            elif kind == "replay":
                assert attacker is not None
                entry = attacker.replay(int(msg["op_id"]))
                reply({"type": "ack", "of": "replay", "op_id": entry.op_id})
            else:
                reply({"type": "error", "message": f"unknown command {kind!r}"})
        except Exception as exc:
            reply({"type": "error", "message": str(exc)})

    def _loop(self) -> None:
        wall_start = time.monotonic()
        virtual_start = self.world.net.now_ms
        while not self._stop.is_set():
            try:
                while True:
                    sub, msg = self._commands.get_nowait()
                    self._handle(sub, msg)
            except queue.Empty:
                pass
            elapsed_ms = (time.monotonic() - wall_start) * 1000.0 * self.time_scale
            target = min(int(virtual_start + elapsed_ms), self.config.duration_ms)
            if target > self.world.net.now_ms:
                self.world.advance_to(target)
            if self.world.net.now_ms >= self.config.duration_ms:
                # End of scenario: keep serving commands (roster, journal
                # inspection) without advancing time.
                pass
            time.sleep(0.005)


def create_app(service: ControlService, frontend_dir: "str | Path | None" = None) -> FastAPI:
    app = FastAPI(title="blelab control API")

    @app.get("/api/devices")
    def devices() -> list[dict]:
        return service.device_roster()

    @app.post("/api/command")
    def command(message: dict) -> dict:
        return service.request(message)

    @app.get("/api/config")
    def config() -> dict[str, Any]:
        from .scenario import config_to_dict

        return config_to_dict(service.config)

    @app.websocket("/ws")
    async def ws(websocket: WebSocket) -> None:
        await websocket.accept()
        sub = service.subscribe()

        async def pump_out() -> None:
            while True:
                try:
                    message = sub.outbox.get_nowait()
                except queue.Empty:
                    await asyncio.sleep(0.01)
                    continue
                await websocket.send_text(json.dumps(message))

        pump = asyncio.create_task(pump_out())
        try:
            while True:
                text = await websocket.receive_text()
                try:
                    message = json.loads(text)
                except json.JSONDecodeError:
                    sub.outbox.put({"type": "error", "message": "invalid JSON"})
                    continue
                service.submit(message, sub)
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()
            service.unsubscribe(sub)

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")
    return app


def serve(
    config: ScenarioConfig,
    port: int,
    time_scale: float = 1.0,
    host: str = "127.0.0.1",
    frontend_dir: "str | Path | None" = None,
) -> None:
    """Run the control service until interrupted."""
    import uvicorn

    service = ControlService(config, time_scale=time_scale)
    app = create_app(service, frontend_dir=frontend_dir)
    service.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise PortUnavailable(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        service.stop()
