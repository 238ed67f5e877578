// Pure board model plus a thin DOM painter. The model is what tests
// exercise; the painter only maps model cells to elements.

import type { ClientSessionView } from "./state.js";

// There is deliberately no "harmful" style: live views cannot express one.
export type CellStyle = "empty" | "start" | "goal" | "agent";

export interface BoardModel {
  width: number;
  height: number;
  cells: CellStyle[][]; // [y][x]
  disabled: string[]; // unavailable directions, greyed out
}

const ALL_DIRECTIONS = ["up", "down", "left", "right"];

export function boardModel(view: ClientSessionView): BoardModel {
  const cells: CellStyle[][] = [];
  for (let y = 0; y < view.height; y++) {
    const row: CellStyle[] = [];
    for (let x = 0; x < view.width; x++) row.push("empty");
    cells.push(row);
  }
  cells[view.start.y][view.start.x] = "start";
  for (const g of view.goals) cells[g.y][g.x] = "goal";
  // agent wins over start/goal markers at the same tile
  cells[view.position.y][view.position.x] = "agent";
  return {
    width: view.width,
    height: view.height,
    cells,
    disabled: ALL_DIRECTIONS.filter((d) => !view.available.includes(d)),
  };
}

// Tiles adjacent to the agent map to the proposal that reaches them.
export function directionToTile(
  view: ClientSessionView,
  x: number,
  y: number,
): string | null {
  const dx = x - view.position.x;
  const dy = y - view.position.y;
  if (dx === 0 && dy === -1) return "up";
  if (dx === 0 && dy === 1) return "down";
  if (dx === -1 && dy === 0) return "left";
  if (dx === 1 && dy === 0) return "right";
  return null;
}

export function paintBoard(root: HTMLElement, model: BoardModel): void {
  root.textContent = "";
  root.style.display = "grid";
  root.style.gridTemplateColumns = `repeat(${model.width}, 2.2em)`;
  for (let y = 0; y < model.height; y++) {
    for (let x = 0; x < model.width; x++) {
      const cell = document.createElement("div");
      cell.className = `cell cell-${model.cells[y][x]}`;
      cell.dataset.x = String(x);
      cell.dataset.y = String(y);
      root.appendChild(cell);
    }
  }
}
