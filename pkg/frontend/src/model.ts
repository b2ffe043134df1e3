/**
 * Canvas-side topology model. Serializes to exactly the adjacency document
 * the controller accepts: {"labels": [...], "matrix": [[ms|null, ...]],
 * "media": [[...]]} with compact separators, so a deploy/refetch round trip
 * is byte-comparable.
 */

export type Medium = "wired" | "wireless";

export interface CanvasNode {
  label: string;
  x: number;
  y: number;
}

export interface CanvasEdge {
  a: number; // node index
  b: number;
  delayMs: number;
  medium: Medium;
}

export interface AdjacencyDocument {
  labels: string[];
  matrix: (number | null)[][];
  media: (Medium | null)[][];
}

export interface EdgeIssue {
  edge: number; // index into edges
  message: string;
}

export class CanvasTopology {
  nodes: CanvasNode[] = [];
  edges: CanvasEdge[] = [];
  dirty = false;

  addNode(x: number, y: number, label?: string): number {
    const name = label ?? this.nextLabel();
    if (this.nodes.some((n) => n.label === name)) {
      throw new Error(`duplicate label ${name}`);
    }
    this.nodes.push({ label: name, x, y });
    this.dirty = true;
    return this.nodes.length - 1;
  }

  nextLabel(): string {
    let i = this.nodes.length;
    for (;;) {
      const candidate = `N${i}`;
      if (!this.nodes.some((n) => n.label === candidate)) return candidate;
      i += 1;
    }
  }

  moveNode(index: number, x: number, y: number): void {
    const node = this.nodes[index];
    if (!node) throw new Error(`no node ${index}`);
    node.x = x;
    node.y = y;
  }

  renameNode(index: number, label: string): void {
    const node = this.nodes[index];
    if (!node) throw new Error(`no node ${index}`);
    if (this.nodes.some((n, i) => i !== index && n.label === label)) {
      throw new Error(`duplicate label ${label}`);
    }
    node.label = label;
    this.dirty = true;
  }

  findEdge(a: number, b: number): number {
    return this.edges.findIndex(
      (e) => (e.a === a && e.b === b) || (e.a === b && e.b === a),
    );
  }

  addEdge(a: number, b: number, delayMs: number, medium: Medium = "wired"): number {
    if (a === b) throw new Error("no self links");
    if (!this.nodes[a] || !this.nodes[b]) throw new Error("edge endpoints must exist");
    if (this.findEdge(a, b) >= 0) throw new Error("edge already present");
    this.edges.push({ a: Math.min(a, b), b: Math.max(a, b), delayMs, medium });
    this.dirty = true;
    return this.edges.length - 1;
  }

  updateEdge(index: number, delayMs: number, medium?: Medium): void {
    const edge = this.edges[index];
    if (!edge) throw new Error(`no edge ${index}`);
    edge.delayMs = delayMs;
    if (medium) edge.medium = medium;
    this.dirty = true;
  }

  removeEdge(index: number): void {
    if (!this.edges[index]) throw new Error(`no edge ${index}`);
    this.edges.splice(index, 1);
    this.dirty = true;
  }

  edgeKey(index: number): string {
    const edge = this.edges[index];
    if (!edge) throw new Error(`no edge ${index}`);
    const la = this.nodes[edge.a]?.label;
    const lb = this.nodes[edge.b]?.label;
    return `${la}-${lb}`;
  }

  /** Per-edge validation problems; deploy is blocked while any exist. */
  validate(): EdgeIssue[] {
    const issues: EdgeIssue[] = [];
    this.edges.forEach((edge, i) => {
      if (!(edge.delayMs > 0) || !Number.isFinite(edge.delayMs)) {
        issues.push({ edge: i, message: `delay must be a positive number of ms` });
      }
    });
    return issues;
  }

  canDeploy(): boolean {
    return this.nodes.length > 0 && this.validate().length === 0;
  }

  toDocument(): AdjacencyDocument {
    const n = this.nodes.length;
    const matrix: (number | null)[][] = Array.from({ length: n }, () =>
      Array<number | null>(n).fill(null),
    );
    const media: (Medium | null)[][] = Array.from({ length: n }, () =>
      Array<Medium | null>(n).fill(null),
    );
    for (const edge of this.edges) {
      matrix[edge.a]![edge.b] = edge.delayMs;
      matrix[edge.b]![edge.a] = edge.delayMs;
      media[edge.a]![edge.b] = edge.medium;
      media[edge.b]![edge.a] = edge.medium;
    }
    return { labels: this.nodes.map((node) => node.label), matrix, media };
  }

  canonicalText(): string {
    return canonicalDocumentText(this.toDocument());
  }

  static fromDocument(doc: AdjacencyDocument, width = 800, height = 500): CanvasTopology {
    const topo = new CanvasTopology();
    const n = doc.labels.length;
    doc.labels.forEach((label, i) => {
      // default ring layout; the editor repositions freely afterwards
      const angle = (2 * Math.PI * i) / Math.max(n, 1);
      topo.addNode(
        Math.round(width / 2 + (width / 3) * Math.cos(angle)),
        Math.round(height / 2 + (height / 3) * Math.sin(angle)),
        label,
      );
    });
    for (let i = 0; i < n; i += 1) {
      for (let j = i + 1; j < n; j += 1) {
        const delay = doc.matrix[i]?.[j];
        if (delay !== null && delay !== undefined) {
          const medium = (doc.media?.[i]?.[j] ?? "wired") as Medium;
          topo.addEdge(i, j, delay, medium);
        }
      }
    }
    topo.dirty = false;
    return topo;
  }
}

/**
 * Render a document in canonical bytes: fixed key order, compact separators,
 * integral delays as integers. Matches the controller's own serialization.
 */
export function canonicalDocumentText(doc: {
  labels: string[];
  matrix: (number | null)[][];
  media?: (Medium | null)[][] | null;
}): string {
  const n = doc.labels.length;
  const media: (Medium | null)[][] =
    doc.media ??
    Array.from({ length: n }, (_, i) =>
      doc.matrix[i]!.map((cell) => (cell === null ? null : "wired")),
    );
  const canonical = {
    labels: doc.labels,
    matrix: doc.matrix.map((row) => row.map(normalizeDelay)),
    media,
  };
  return JSON.stringify(canonical);
}

function normalizeDelay(cell: number | null): number | null {
  if (cell === null) return null;
  return Number.isInteger(cell) ? Math.trunc(cell) : cell;
}
