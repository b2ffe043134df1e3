/** Interaction model for the topology editor: hit testing, drag, link
 * creation and inline edge errors. No DOM here so it tests headless. */

import { CanvasTopology, type Medium } from "./model.js";

export const NODE_RADIUS = 18;

export type Tool = "select" | "add-node" | "connect";

export interface InlineError {
  edge: number;
  message: string;
}

export class EditorState {
  topology = new CanvasTopology();
  tool: Tool = "select";
  selectedNode: number | null = null;
  connectFrom: number | null = null;
  dragging: number | null = null;
  inlineErrors: InlineError[] = [];
  deployedId: string | null = null;

  hitNode(x: number, y: number): number | null {
    for (let i = this.topology.nodes.length - 1; i >= 0; i -= 1) {
      const node = this.topology.nodes[i]!;
      const dx = node.x - x;
      const dy = node.y - y;
      if (dx * dx + dy * dy <= NODE_RADIUS * NODE_RADIUS) return i;
    }
    return null;
  }

  hitEdge(x: number, y: number, tolerance = 6): number | null {
    for (let i = 0; i < this.topology.edges.length; i += 1) {
      const edge = this.topology.edges[i]!;
      const a = this.topology.nodes[edge.a]!;
      const b = this.topology.nodes[edge.b]!;
      if (pointToSegment(x, y, a.x, a.y, b.x, b.y) <= tolerance) return i;
    }
    return null;
  }

  pointerDown(x: number, y: number): void {
    const hit = this.hitNode(x, y);
    if (this.tool === "add-node") {
      if (hit === null) this.topology.addNode(x, y);
      return;
    }
    if (this.tool === "connect") {
      if (hit === null) {
        this.connectFrom = null;
        return;
      }
      if (this.connectFrom === null) {
        this.connectFrom = hit;
        return;
      }
      if (this.connectFrom !== hit && this.topology.findEdge(this.connectFrom, hit) < 0) {
        // new edges start with a placeholder the operator edits immediately
        this.topology.addEdge(this.connectFrom, hit, 1, "wired");
      }
      this.connectFrom = null;
      return;
    }
    this.selectedNode = hit;
    this.dragging = hit;
  }

  pointerMove(x: number, y: number): void {
    if (this.dragging !== null) this.topology.moveNode(this.dragging, x, y);
  }

  pointerUp(): void {
    this.dragging = null;
  }

  /**
   * Apply an operator-typed delay to an edge. Bad input becomes an inline
   * error on that edge and the model keeps its previous value, so no deploy
   * request can carry it.
   */
  setEdgeDelay(edge: number, text: string, medium?: Medium): boolean {
    const value = Number(text);
    this.inlineErrors = this.inlineErrors.filter((e) => e.edge !== edge);
    if (!Number.isFinite(value) || value <= 0) {
      this.inlineErrors.push({ edge, message: `"${text}" is not a positive delay in ms` });
      return false;
    }
    this.topology.updateEdge(edge, value, medium);
    return true;
  }

  errorFor(edge: number): string | null {
    return this.inlineErrors.find((e) => e.edge === edge)?.message ?? null;
  }

  canDeploy(): boolean {
    return this.inlineErrors.length === 0 && this.topology.canDeploy();
  }
}

function pointToSegment(
  px: number,
  py: number,
  ax: number,
  ay: number,
  bx: number,
  by: number,
): number {
  const dx = bx - ax;
  const dy = by - ay;
  const lengthSq = dx * dx + dy * dy;
  let t = lengthSq === 0 ? 0 : ((px - ax) * dx + (py - ay) * dy) / lengthSq;
  t = Math.max(0, Math.min(1, t));
  const cx = ax + t * dx;
  const cy = ay + t * dy;
  return Math.hypot(px - cx, py - cy);
}
