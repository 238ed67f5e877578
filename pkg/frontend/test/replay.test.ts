import { describe, expect, it } from "vitest";

import {
  parseEpisodeLog,
  parseGridDocument,
  replayFrames,
  ReplayController,
} from "../src/replay.js";
import { T3_DOC } from "./fixtures.js";

// Serialized form of the 4-step win (0,0) -> (0,1) -> (0,2) -> (1,2) -> (2,2).
const WIN_LOG = `idglog v1
meta instance=0123456789abcdef outcome=goal seed=0 leader=human follower=optimal steps=4
step 0 0 s0[0:.,1:.] 0 obey 3 0 0
step 1 3 s3[0:.,1:.,2:.] 1 obey 6 0 0
step 2 6 s6[0:.,1:.] 1 obey 7 0 0
step 3 7 s7[0:.,1:g,2:.] 1 obey 8 1 0
`;

const HARM_LOG = `idglog v1
meta instance=0123456789abcdef outcome=harm seed=0 leader=human follower=always-obey steps=3
step 0 0 s0[0:.,1:.] 1 obey 1 0 0
step 1 1 s1[0:.,1:.,2:.] 1 obey 2 0 0
step 2 2 s2[0:.,1:.] 0 obey 5 -1 -1
`;

describe("log parsing", () => {
  it("round trips the win log", () => {
    const replay = parseEpisodeLog(WIN_LOG);
    expect(replay.meta.outcome).toBe("goal");
    expect(replay.steps).toHaveLength(4);
    expect(replay.steps[3].nextState).toBe(8);
    expect(replay.steps[3].leaderReward).toBe(1);
  });

  it("rejects malformed logs", () => {
    expect(() => parseEpisodeLog("not a log\n")).toThrow("not an episode log");
    expect(() => parseEpisodeLog("idglog v1\nmeta a=b\nstep 1 2\n")).toThrow(
      "malformed step",
    );
  });

  it("parses the revealed instance document", () => {
    const grid = parseGridDocument(T3_DOC);
    expect(grid.width).toBe(3);
    expect(grid.lava).toEqual([
      { x: 1, y: 1 },
      { x: 2, y: 1 },
    ]);
  });
});

describe("replay animation", () => {
  it("a 4-step win animates 4 steps ending on the goal", () => {
    const grid = parseGridDocument(T3_DOC);
    const frames = replayFrames(parseEpisodeLog(WIN_LOG), grid);
    const control = new ReplayController(frames);
    expect(control.stepCount).toBe(4);
    expect(control.current().position).toEqual({ x: 0, y: 0 });
    let frame = control.current();
    for (let i = 0; i < 4; i++) frame = control.next();
    expect(frame.position).toEqual({ x: 2, y: 2 });
    expect(frame.outcome).toBe("goal");
    expect(control.atEnd()).toBe(true);
    expect(control.next().position).toEqual({ x: 2, y: 2 }); // clamped
  });

  it("an empty log is a single static frame", () => {
    const grid = parseGridDocument(T3_DOC);
    const empty = parseEpisodeLog(
      "idglog v1\nmeta instance=x outcome=budget seed=0 leader=a follower=b steps=0\n",
    );
    const control = new ReplayController(replayFrames(empty, grid));
    expect(control.stepCount).toBe(0);
    expect(control.current().position).toEqual(grid.start);
    expect(control.atEnd()).toBe(true);
  });

  it("a harm outcome ends on the harmful tile", () => {
    const grid = parseGridDocument(T3_DOC);
    const frames = replayFrames(parseEpisodeLog(HARM_LOG), grid);
    const last = frames[frames.length - 1];
    expect(last.outcome).toBe("harm");
    expect(
      grid.lava.some(
        (c) => c.x === last.position.x && c.y === last.position.y,
      ),
    ).toBe(true);
  });
});
