// Browser entry point: wires the masked board, keyboard/click proposals
// and the end-of-episode replay panel together. All game state lives on
// the server; this file only moves service responses into the DOM.

import { ApiClient } from "./api.js";
import { boardModel, directionToTile, paintBoard } from "./board.js";
import {
  applyError,
  applyTurn,
  describeLastTurn,
  newSessionView,
  type ClientSessionView,
} from "./state.js";
import {
  parseEpisodeLog,
  parseGridDocument,
  replayFrames,
  ReplayController,
} from "./replay.js";

const KEY_DIRECTIONS: Record<string, string> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private api: ApiClient;
  private view: ClientSessionView | null = null;
  private inFlight = false; // one proposal at a time; input disabled meanwhile
  private replay: ReplayController | null = null;

  constructor(base: string) {
    this.api = new ApiClient(base);
  }

  async start(documentText: string, feedback: boolean): Promise<void> {
    const inst = await this.api.createInstance(documentText);
    const created = await this.api.createSession({
      instance_id: inst.id,
      follower: "optimal",
      feedback,
    });
    this.view = newSessionView(created.session_id, created.observation);
    this.replay = null;
    this.render();
  }

  async propose(direction: string): Promise<void> {
    const view = this.view;
    if (!view || view.status !== "active" || this.inFlight) return;
    if (!view.available.includes(direction)) return; // greyed out
    this.inFlight = true;
    this.render();
    try {
      const result = await this.api.propose(view.sessionId, direction);
      this.view = applyTurn(view, direction, result);
      if (this.view.status === "finished") await this.loadReplay();
    } catch (err) {
      this.view = applyError(view, err instanceof Error ? err.message : String(err));
    } finally {
      this.inFlight = false;
      this.render();
    }
  }

  private async loadReplay(): Promise<void> {
    if (!this.view) return;
    const body = await this.api.log(this.view.sessionId);
    if (body.status !== "finished") return;
    const replay = parseEpisodeLog(body.log);
    const grid = parseGridDocument(body.instance);
    this.replay = new ReplayController(replayFrames(replay, grid));
  }

  private render(): void {
    const view = this.view;
    if (!view) return;
    paintBoard(el("board"), boardModel(view));
    el("last-turn").textContent = describeLastTurn(view);
    el("status").textContent =
      view.status === "finished"
        ? `finished: ${view.outcome} in ${view.history.length} turns`
        : this.inFlight
          ? "waiting for follower..."
          : `your move (${view.available.join(", ")})`;
    el("error").textContent = view.error ?? "";
    el<HTMLElement>("replay-panel").hidden = this.replay === null;
  }

  bind(): void {
    document.addEventListener("keydown", (ev) => {
      const direction = KEY_DIRECTIONS[ev.key];
      if (direction) {
        ev.preventDefault();
        void this.propose(direction);
      }
    });
    el("board").addEventListener("click", (ev) => {
      const target = ev.target as HTMLElement;
      const view = this.view;
      if (!view || target.dataset.x === undefined) return;
      const direction = directionToTile(
        view,
        Number(target.dataset.x),
        Number(target.dataset.y),
      );
      if (direction) void this.propose(direction);
    });
    el("replay-next").addEventListener("click", () => {
      if (this.replay) this.showFrame(this.replay.next());
    });
    el("replay-prev").addEventListener("click", () => {
      if (this.replay) this.showFrame(this.replay.prev());
    });
    el<HTMLFormElement>("new-session").addEventListener("submit", (ev) => {
      ev.preventDefault();
      const doc = el<HTMLTextAreaElement>("instance-doc").value;
      const feedback = el<HTMLInputElement>("feedback-toggle").checked;
      void this.start(doc, feedback);
    });
  }

  private showFrame(frame: { position: { x: number; y: number } }): void {
    el("replay-frame").textContent = JSON.stringify(frame);
  }
}

const app = new App(
  (window as unknown as { IDG_API_BASE?: string }).IDG_API_BASE ??
    "http://127.0.0.1:8642",
);
app.bind();
