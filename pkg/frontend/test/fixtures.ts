import type { MaskedView, ProposeResult } from "../src/api.js";

export const T3_DOC = `grid 3 3
start 0 0
goal 2 2
lava 1 1
lava 2 1
`;

// Coordinates the masked surfaces must never contain.
export const T3_LAVA = [
  { x: 1, y: 1 },
  { x: 2, y: 1 },
];

export function t3StartView(): MaskedView {
  return {
    width: 3,
    height: 3,
    start: { x: 0, y: 0 },
    goals: [{ x: 2, y: 2 }],
    position: { x: 0, y: 0 },
    available: ["down", "right"],
    goal_actions: [],
  };
}

export function vetoResult(feedbackOn: boolean): ProposeResult {
  // shape of the service response to proposing "down" at (2,0)
  return {
    decision: "disobey",
    feedback: feedbackOn ? { reason: "harmful" } : null,
    observation: {
      ...t3StartView(),
      position: { x: 2, y: 0 },
      available: ["down", "left"],
    },
    rewards: feedbackOn ? { leader: 0, follower: 1 } : { leader: 0 },
    status: "active",
    outcome: null,
  };
}

export function containsLava(payload: unknown): boolean {
  const text = JSON.stringify(payload).replace(/\s/g, "");
  if (text.toLowerCase().includes("lava")) return true;
  return T3_LAVA.some((c) => text.includes(`"x":${c.x},"y":${c.y}`));
}
