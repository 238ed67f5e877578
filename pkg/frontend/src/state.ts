// Client session model. Constructed exclusively from service responses;
// by construction there is no field that could hold harmful-tile
// coordinates while the session is active.

import type { Coord, MaskedView, ProposeResult, SessionStatus } from "./api.js";

export interface TurnEntry {
  proposal: string;
  decision: "obey" | "disobey";
  reason: string | null;
  leaderReward: number;
}

export interface ClientSessionView {
  sessionId: string;
  width: number;
  height: number;
  start: Coord;
  goals: Coord[];
  position: Coord;
  available: string[];
  history: TurnEntry[];
  status: SessionStatus;
  outcome: string | null;
  error: string | null;
}

export function newSessionView(
  sessionId: string,
  obs: MaskedView,
): ClientSessionView {
  return {
    sessionId,
    width: obs.width,
    height: obs.height,
    start: obs.start,
    goals: obs.goals,
    position: obs.position,
    available: obs.available,
    history: [],
    status: "active",
    outcome: null,
    error: null,
  };
}

// Server-authoritative: the only way the board mutates is by folding in a
// propose() response. No optimistic updates.
export function applyTurn(
  view: ClientSessionView,
  proposal: string,
  result: ProposeResult,
): ClientSessionView {
  const entry: TurnEntry = {
    proposal,
    decision: result.decision,
    reason: result.feedback ? result.feedback.reason : null,
    leaderReward: result.rewards.leader,
  };
  return {
    ...view,
    position: result.observation.position,
    available: result.observation.available,
    history: [...view.history, entry],
    status: result.status,
    outcome: result.outcome,
    error: null,
  };
}

// Errors surface inline and never touch board state.
export function applyError(
  view: ClientSessionView,
  message: string,
): ClientSessionView {
  return { ...view, error: message };
}

export function describeLastTurn(view: ClientSessionView): string {
  const last = view.history[view.history.length - 1];
  if (!last) return "";
  if (last.decision === "obey") return `obeyed: ${last.proposal}`;
  return last.reason === null
    ? `disobeyed: ${last.proposal}`
    : `disobeyed: ${last.reason}`;
}
