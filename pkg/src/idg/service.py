"""Session-oriented HTTP API for interactive play.

A human (or scripted client) acts as leader against a configurable
follower. Responses for active sessions are masked: they never carry
lava placement. The one deliberate exception is the veto feedback
reason code, and only when the session was created with feedback on.

``SessionCore`` is transport independent; the CLI's terminal play mode
drives it directly so both front ends share one masking code path.
"""

from __future__ import annotations

import hashlib
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

from pydantic import BaseModel

from .errors import IdgError, InvalidInput
from .game_core import (
    FollowerAction,
    IdgInstance,
    StateClass,
    apply_protocol,
    is_terminal,
)
from .gridworld import GridInstance, parse_instance, serialize_instance
from .learn import parse_follower_table
from .mdp import (
    EpisodeLog,
    Outcome,
    StepRecord,
    follower_reward,
    instance_digest,
    leader_reward,
    observe,
    serialize_log,
)
from .solver import always_obey_policy, follower_optimal_policy

FOLLOWER_KINDS = ("optimal", "always-obey", "learned")


class InstanceBody(BaseModel):
    document: str


class SessionBody(BaseModel):
    instance_id: str
    follower: str = "optimal"
    feedback: bool = True
    seed: int = 0
    follower_table: Optional[str] = None


class ProposeBody(BaseModel):
    direction: str


class ApiError(IdgError):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


def masked_view(grid: GridInstance, instance: IdgInstance, s: int) -> dict:
    """Leader-visible board state: geometry, start, goals, current position
    and available moves. No field can carry lava placement."""
    x, y = grid.tile_coord(s)
    obs = observe(instance, s)
    labels = instance.action_labels[s]
    return {
        "width": grid.width,
        "height": grid.height,
        "start": {"x": grid.start[0], "y": grid.start[1]},
        "goals": [
            {"x": gx, "y": gy}
            for gx, gy in sorted(grid.goals, key=lambda c: (c[1], c[0]))
        ],
        "position": {"x": x, "y": y},
        "available": list(labels),
        "goal_actions": [labels[a] for a, flag in obs.actions if flag],
    }


def make_follower(kind: str, instance: IdgInstance, table_text: Optional[str]):
    if kind == "optimal":
        return follower_optimal_policy(instance)
    if kind == "always-obey":
        return always_obey_policy(instance)
    if kind == "learned":
        if not table_text:
            raise ApiError(
                400, "missing_table", "follower kind 'learned' needs a trained table"
            )
        return parse_follower_table(table_text).as_policy()
    raise ApiError(
        400,
        "bad_follower",
        f"unknown follower kind {kind!r}",
        {"allowed": list(FOLLOWER_KINDS)},
    )


class SessionCore:
    """One interactive episode with the human as leader."""

    def __init__(
        self,
        session_id: str,
        instance_id: str,
        grid: GridInstance,
        instance: IdgInstance,
        follower,
        follower_kind: str,
        feedback: bool,
        seed: int,
    ):
        if is_terminal(instance, instance.start):
            raise ApiError(400, "bad_instance", "start state is terminal")
        self.session_id = session_id
        self.instance_id = instance_id
        self.grid = grid
        self.instance = instance
        self.follower = follower
        self.follower_kind = follower_kind
        self.feedback = feedback
        self.seed = seed
        self.state = instance.start
        self.records: list[StepRecord] = []
        self.outcome: Optional[Outcome] = None
        self.lock = threading.Lock()

    @property
    def status(self) -> str:
        return "finished" if self.outcome is not None else "active"

    def observation_view(self) -> dict:
        return masked_view(self.grid, self.instance, self.state)

    def propose(self, direction: str) -> dict:
        if self.outcome is not None:
            raise ApiError(
                409,
                "finished",
                "session already finished",
                {"outcome": self.outcome.value},
            )
        inst = self.instance
        s = self.state
        labels = inst.action_labels[s]
        if direction not in labels:
            raise ApiError(
                400,
                "bad_action",
                f"action {direction!r} not available here",
                {"available": list(labels)},
            )
        a = labels.index(direction)
        decision = self.follower.decide(s, a)
        s_next = apply_protocol(inst, s, a, decision)
        r_l = leader_reward(inst, s, a, s_next)
        r_f = follower_reward(inst, s, a, decision, s_next)
        self.records.append(
            StepRecord(
                turn=len(self.records),
                state=s,
                observation=observe(inst, s),
                action=a,
                decision=decision,
                next_state=s_next,
                leader_reward=r_l,
                follower_reward=r_f,
            )
        )
        self.state = s_next
        if is_terminal(inst, s_next):
            self.outcome = (
                Outcome.GOAL
                if inst.classes[s_next] is StateClass.GOAL
                else Outcome.HARM
            )
        finished = self.outcome is not None
        feedback = None
        if decision is FollowerAction.DISOBEY and self.feedback:
            feedback = {"reason": "harmful"}
        rewards = {"leader": r_l}
        # The follower's reward reveals whether the proposal was harmful, so
        # it is released only with feedback on or once the session is over.
        if self.feedback or finished:
            rewards["follower"] = r_f
        return {
            "decision": decision.value,
            "feedback": feedback,
            "observation": self.observation_view(),
            "rewards": rewards,
            "status": self.status,
            "outcome": self.outcome.value if finished else None,
        }

    def episode_log(self) -> EpisodeLog:
        assert self.outcome is not None
        return EpisodeLog(
            instance_digest=instance_digest(self.instance),
            records=tuple(self.records),
            outcome=self.outcome,
            seed=self.seed,
            leader_tag="human",
            follower_tag=self.follower_kind,
        )

    def log_view(self) -> dict:
        if self.outcome is not None:
            return {
                "status": "finished",
                "outcome": self.outcome.value,
                "log": serialize_log(self.episode_log()),
                "instance": serialize_instance(self.grid),
            }
        # Active sessions get a masked view: follower rewards can leak
        # harmfulness, so they are withheld until the session ends.
        return {
            "status": "active",
            "outcome": None,
            "steps": [
                {
                    "turn": r.turn,
                    "state": r.observation.key(),
                    "action": self.instance.action_labels[r.state][r.action],
                    "decision": r.decision.value,
                    "leader_reward": r.leader_reward,
                }
                for r in self.records
            ],
        }


class Store:
    def __init__(self):
        self.instances: dict[str, tuple[GridInstance, IdgInstance]] = {}
        self.sessions: dict[str, SessionCore] = {}
        self.lock = threading.Lock()

    def add_instance(self, document: str) -> str:
        grid = parse_instance(document)
        canonical = serialize_instance(grid)
        iid = hashlib.sha256(canonical.encode()).hexdigest()[:12]
        with self.lock:
            if iid not in self.instances:
                from .gridworld import to_idg

                self.instances[iid] = (grid, to_idg(grid))
        return iid

    def get_instance(self, iid: str):
        try:
            return self.instances[iid]
        except KeyError:
            raise ApiError(404, "not_found", f"unknown instance {iid!r}")

    def create_session(
        self,
        instance_id: str,
        follower_kind: str,
        feedback: bool,
        seed: int = 0,
        follower_table: Optional[str] = None,
    ) -> SessionCore:
        grid, instance = self.get_instance(instance_id)
        follower = make_follower(follower_kind, instance, follower_table)
        sid = uuid.uuid4().hex[:16]
        core = SessionCore(
            sid, instance_id, grid, instance, follower, follower_kind, feedback, seed
        )
        with self.lock:
            self.sessions[sid] = core
        return core

    def get_session(self, sid: str) -> SessionCore:
        try:
            return self.sessions[sid]
        except KeyError:
            raise ApiError(404, "not_found", f"unknown session {sid!r}")


def create_app():
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="intelligent disobedience service")
    # Browser clients are served separately as static files.
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = Store()
    app.state.store = store

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={
                "code": exc.code,
                "message": exc.message,
                "details": exc.details,
            },
        )

    @app.exception_handler(InvalidInput)
    async def invalid_input_handler(request: Request, exc: InvalidInput):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid_input", "message": str(exc), "details": {}},
        )

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/instances")
    async def create_instance(body: InstanceBody):
        iid = store.add_instance(body.document)
        grid, _ = store.get_instance(iid)
        return {"id": iid, "document": serialize_instance(grid)}

    @app.get("/instances/{iid}")
    async def get_instance(iid: str):
        grid, _ = store.get_instance(iid)
        return {"id": iid, "document": serialize_instance(grid)}

    @app.post("/sessions")
    async def create_session(body: SessionBody):
        core = store.create_session(
            body.instance_id,
            body.follower,
            body.feedback,
            body.seed,
            body.follower_table,
        )
        return {
            "session_id": core.session_id,
            "status": core.status,
            "observation": core.observation_view(),
        }

    @app.get("/sessions/{sid}/observation")
    async def get_observation(sid: str):
        core = store.get_session(sid)
        return {
            "status": core.status,
            "outcome": core.outcome.value if core.outcome else None,
            "observation": core.observation_view(),
        }

    @app.post("/sessions/{sid}/propose")
    async def propose(sid: str, body: ProposeBody):
        core = store.get_session(sid)
        # Turn atomicity: one proposal at a time per session; losers get a
        # conflict instead of queueing a stale turn.
        if not core.lock.acquire(blocking=False):
            raise ApiError(409, "conflict", "another proposal is in flight")
        try:
            return core.propose(body.direction)
        finally:
            core.lock.release()

    @app.get("/sessions/{sid}/log")
    async def get_log(sid: str):
        core = store.get_session(sid)
        return core.log_view()

    return app


def serve(host: str = "127.0.0.1", port: int = 8642):
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")
