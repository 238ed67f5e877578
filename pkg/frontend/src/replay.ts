// Replay of finished episodes from the service's serialized log. The
// session is over, so the post-hoc view may reveal harmful tiles; the
// caller styles replay frames distinctly from the live masked board.

export interface ReplayStep {
  turn: number;
  state: number;
  observationKey: string;
  action: number;
  decision: "obey" | "disobey";
  nextState: number;
  leaderReward: number;
  followerReward: number;
}

export interface EpisodeReplay {
  meta: Record<string, string>;
  steps: ReplayStep[];
}

export function parseEpisodeLog(text: string): EpisodeReplay {
  const lines = text.split("\n").filter((l) => l.trim() !== "");
  if (lines[0] !== "idglog v1") throw new Error("not an episode log");
  if (lines.length < 2 || !lines[1].startsWith("meta "))
    throw new Error("missing log metadata");
  const meta: Record<string, string> = {};
  for (const kv of lines[1].split(/\s+/).slice(1)) {
    const eq = kv.indexOf("=");
    if (eq < 0) throw new Error(`malformed metadata: ${kv}`);
    meta[kv.slice(0, eq)] = kv.slice(eq + 1);
  }
  const steps: ReplayStep[] = [];
  for (const line of lines.slice(2)) {
    const p = line.split(/\s+/);
    if (p[0] !== "step" || p.length !== 9)
      throw new Error(`malformed step line: ${line}`);
    steps.push({
      turn: Number(p[1]),
      state: Number(p[2]),
      observationKey: p[3],
      action: Number(p[4]),
      decision: p[5] as "obey" | "disobey",
      nextState: Number(p[6]),
      leaderReward: Number(p[7]),
      followerReward: Number(p[8]),
    });
  }
  return { meta, steps };
}

export interface RevealedGrid {
  width: number;
  height: number;
  start: { x: number; y: number };
  goals: { x: number; y: number }[];
  lava: { x: number; y: number }[];
}

// Instance documents come back with the finished log only.
export function parseGridDocument(text: string): RevealedGrid {
  const grid: RevealedGrid = {
    width: 0,
    height: 0,
    start: { x: 0, y: 0 },
    goals: [],
    lava: [],
  };
  for (const raw of text.split("\n")) {
    const line = raw.split("#")[0].trim();
    if (!line) continue;
    const [kind, a, b] = line.split(/\s+/);
    const x = Number(a);
    const y = Number(b);
    if (kind === "grid") {
      grid.width = x;
      grid.height = y;
    } else if (kind === "start") grid.start = { x, y };
    else if (kind === "goal") grid.goals.push({ x, y });
    else if (kind === "lava") grid.lava.push({ x, y });
    else throw new Error(`unknown line: ${line}`);
  }
  if (grid.width < 1 || grid.height < 1) throw new Error("missing grid size");
  return grid;
}

export interface ReplayFrame {
  position: { x: number; y: number };
  decision: "obey" | "disobey" | null; // null on the initial frame
  outcome: string | null; // set on the last frame only
}

function tile(grid: RevealedGrid, state: number) {
  return { x: state % grid.width, y: Math.floor(state / grid.width) };
}

// One frame before any move, then one per step. An empty log is a single
// static frame at the start tile.
export function replayFrames(
  replay: EpisodeReplay,
  grid: RevealedGrid,
): ReplayFrame[] {
  const origin = replay.steps.length
    ? tile(grid, replay.steps[0].state)
    : grid.start;
  const frames: ReplayFrame[] = [
    { position: origin, decision: null, outcome: null },
  ];
  for (const step of replay.steps) {
    frames.push({
      position: tile(grid, step.nextState),
      decision: step.decision,
      outcome: null,
    });
  }
  frames[frames.length - 1].outcome = replay.meta["outcome"] ?? null;
  return frames;
}

// User-paced stepper over the frames.
export class ReplayController {
  private index = 0;

  constructor(readonly frames: ReplayFrame[]) {}

  get stepCount(): number {
    return this.frames.length - 1;
  }

  current(): ReplayFrame {
    return this.frames[this.index];
  }

  next(): ReplayFrame {
    if (this.index < this.frames.length - 1) this.index++;
    return this.current();
  }

  prev(): ReplayFrame {
    if (this.index > 0) this.index--;
    return this.current();
  }

  atEnd(): boolean {
    return this.index === this.frames.length - 1;
  }
}
