/** DOM wiring: canvas rendering, toolbar, experiment panel, live overlay.
 * All decisions live in the headless modules; this file only draws and
 * forwards events. */

import { ApiError, ConsoleApi, type ExperimentRequest } from "./api.js";
import { ThroughputChart, toPixels, type PlotArea } from "./charts.js";
import { EditorState, NODE_RADIUS } from "./editor.js";
import { CanvasTopology } from "./model.js";
import { DelayOverlay } from "./overlay.js";

const CHART_AREA: PlotArea = { width: 460, height: 220, padLeft: 40, padBottom: 24, padTop: 10, padRight: 10 };

export class ConsoleUi {
  editor = new EditorState();
  overlay = new DelayOverlay();
  statusLine = "";
  private overlayAbort: AbortController | null = null;
  private charts = new Map<string, ThroughputChart>();

  constructor(
    private api: ConsoleApi,
    private doc: Document,
  ) {}

  mount(): void {
    const doc = this.doc;
    const canvas = doc.getElementById("topo-canvas") as HTMLCanvasElement;
    canvas.addEventListener("mousedown", (ev) => {
      const { x, y } = this.canvasPoint(canvas, ev);
      const edge = this.editor.hitNode(x, y) === null ? this.editor.hitEdge(x, y) : null;
      this.editor.pointerDown(x, y);
      if (edge !== null && this.editor.tool === "select") this.promptEdgeDelay(edge);
      this.render();
    });
    canvas.addEventListener("mousemove", (ev) => {
      const { x, y } = this.canvasPoint(canvas, ev);
      this.editor.pointerMove(x, y);
      if (this.editor.dragging !== null) this.render();
    });
    canvas.addEventListener("mouseup", () => this.editor.pointerUp());

    for (const tool of ["select", "add-node", "connect"] as const) {
      doc.getElementById(`tool-${tool}`)?.addEventListener("click", () => {
        this.editor.tool = tool;
        this.render();
      });
    }
    doc.getElementById("deploy")?.addEventListener("click", () => void this.deploy());
    doc.getElementById("run-experiment")?.addEventListener("click", () => void this.runExperiment());
    doc.getElementById("fail-link")?.addEventListener("click", () => void this.failLinkNow());
    this.render();
  }

  private canvasPoint(canvas: HTMLCanvasElement, ev: MouseEvent): { x: number; y: number } {
    const rect = canvas.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  }

  private promptEdgeDelay(edge: number): void {
    const current = this.editor.topology.edges[edge];
    if (!current) return;
    const typed = window.prompt(`Delay for ${this.editor.topology.edgeKey(edge)} (ms)`, String(current.delayMs));
    if (typed === null) return;
    this.editor.setEdgeDelay(edge, typed);
    this.render();
  }

  async deploy(): Promise<void> {
    if (!this.editor.canDeploy()) return;
    try {
      const receipt = await this.api.deployTopology(this.editor.topology.canonicalText());
      this.editor.deployedId = receipt.id;
      this.editor.topology.dirty = false;
      this.status(`deployed ${receipt.id}: ${receipt.validation.nodes} nodes, ${receipt.validation.links} links`);
      this.startOverlay();
    } catch (err) {
      if (err instanceof ApiError) this.status(`deploy rejected (${err.failure.kind ?? err.failure.status}): ${err.failure.error}`);
      else throw err;
    }
    this.render();
  }

  startOverlay(): void {
    this.overlayAbort?.abort();
    const abort = new AbortController();
    this.overlayAbort = abort;
    void this.api
      .streamDelays((batch) => {
        this.overlay.applyBatch(batch);
        this.render();
      }, abort.signal)
      .then(() => {
        this.overlay.clear();
        this.render();
      })
      .catch(() => {
        this.overlay.clear();
        this.render();
      });
  }

  async runExperiment(): Promise<void> {
    const doc = this.doc;
    if (!this.editor.deployedId) {
      this.status("deploy a topology first");
      return;
    }
    const read = (id: string) => (doc.getElementById(id) as HTMLInputElement).value;
    const strategies: ("best_route" | "multicast")[] = ["best_route", "multicast"];
    const failAt = Number(read("exp-fail-at"));
    const failLink = read("exp-fail-link"); // "A-B" or empty
    this.charts.clear();
    for (const strategy of strategies) {
      const spec: ExperimentRequest = {
        topology_id: this.editor.deployedId,
        consumer: read("exp-consumer"),
        producer: read("exp-producer"),
        strategy,
        demand_mbps: Number(read("exp-rate")),
        payload_bytes: 1250,
        duration_s: Number(read("exp-duration")),
        failures:
          failLink && Number.isFinite(failAt)
            ? [{ a: failLink.split("-")[0] ?? "", b: failLink.split("-")[1] ?? "", at_s: failAt }]
            : [],
        repetitions: Number(read("exp-reps")),
        seed: Number(read("exp-seed")),
      };
      try {
        const handle = await this.api.submitExperiment(spec);
        this.status(`${strategy}: ${handle.id} running`);
        await this.api.pollUntilDone(handle.id, {
          onState: (s) => this.status(`${strategy}: ${s}`),
        });
        let metrics = await this.api.fetchMetrics(handle.id);
        while (metrics === null) {
          // 409 window between state flip and metrics availability
          await new Promise((resolve) => setTimeout(resolve, 200));
          metrics = await this.api.fetchMetrics(handle.id);
        }
        this.charts.set(strategy, ThroughputChart.fromSummaries(metrics.repetitions, spec.consumer));
        this.status(`${strategy}: done`);
      } catch (err) {
        if (err instanceof ApiError) this.status(`${strategy} rejected: ${err.failure.error}`);
        else throw err;
      }
      this.render();
    }
  }

  async failLinkNow(): Promise<void> {
    const link = (this.doc.getElementById("exp-fail-link") as HTMLInputElement).value;
    const [a, b] = link.split("-");
    if (!a || !b) {
      this.status("fail link: use the A-B form");
      return;
    }
    try {
      await this.api.setLinkState(a, b, false);
      this.status(`link ${link} forced down`);
    } catch (err) {
      if (err instanceof ApiError) this.status(`fail link: ${err.failure.error}`);
      else throw err;
    }
  }

  status(text: string): void {
    this.statusLine = text;
    const el = this.doc.getElementById("status");
    if (el) el.textContent = text;
  }

  render(): void {
    this.renderTopology();
    this.renderCharts();
    const deploy = this.doc.getElementById("deploy") as HTMLButtonElement | null;
    if (deploy) deploy.disabled = !this.editor.canDeploy();
    const errors = this.doc.getElementById("edge-errors");
    if (errors) {
      errors.textContent = this.editor.inlineErrors
        .map((e) => `${this.editor.topology.edgeKey(e.edge)}: ${e.message}`)
        .join("\n");
    }
  }

  private renderTopology(): void {
    const canvas = this.doc.getElementById("topo-canvas") as HTMLCanvasElement | null;
    const ctx = canvas?.getContext("2d");
    if (!canvas || !ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const topo: CanvasTopology = this.editor.topology;
    ctx.font = "12px sans-serif";
    topo.edges.forEach((edge, i) => {
      const a = topo.nodes[edge.a]!;
      const b = topo.nodes[edge.b]!;
      const style = this.overlay.styleFor(topo.edgeKey(i));
      ctx.beginPath();
      ctx.setLineDash(style?.broken ? [6, 6] : []);
      ctx.strokeStyle = style?.broken ? "#c0392b" : edge.medium === "wireless" ? "#2980b9" : "#555";
      ctx.lineWidth = this.editor.errorFor(i) ? 3 : 1.5;
      ctx.moveTo(a.x, a.y);
      ctx.lineTo(b.x, b.y);
      ctx.stroke();
      ctx.setLineDash([]);
      const midX = (a.x + b.x) / 2;
      const midY = (a.y + b.y) / 2;
      ctx.fillStyle = this.editor.errorFor(i) ? "#c0392b" : "#222";
      const label = style ? `${edge.delayMs} ms | ${style.label}` : `${edge.delayMs} ms`;
      ctx.fillText(label, midX + 4, midY - 4);
    });
    topo.nodes.forEach((node, i) => {
      ctx.beginPath();
      ctx.fillStyle = i === this.editor.selectedNode ? "#f39c12" : "#2c3e50";
      ctx.arc(node.x, node.y, NODE_RADIUS, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = "#fff";
      ctx.textAlign = "center";
      ctx.fillText(node.label, node.x, node.y + 4);
      ctx.textAlign = "start";
    });
  }

  private renderCharts(): void {
    for (const [strategy, chart] of this.charts) {
      const canvas = this.doc.getElementById(`chart-${strategy}`) as HTMLCanvasElement | null;
      const ctx = canvas?.getContext("2d");
      if (!canvas || !ctx) continue;
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      const band = chart.meanBand();
      if (!band.length) continue;
      const tMax = Math.max(...band.map((p) => p.t)) + 1;
      const vMax = Math.max(chart.maxValue(), 1);
      ctx.strokeStyle = "#bbb";
      for (const line of chart.lines) {
        ctx.beginPath();
        line.points.forEach(([t, v], idx) => {
          const [x, y] = toPixels([t, v], CHART_AREA, tMax, vMax);
          if (idx === 0) ctx.moveTo(x, y);
          else ctx.lineTo(x, y);
        });
        ctx.stroke();
      }
      ctx.strokeStyle = strategy === "multicast" ? "#27ae60" : "#8e44ad";
      ctx.lineWidth = 2;
      ctx.beginPath();
      band.forEach((p, idx) => {
        const [x, y] = toPixels([p.t, p.mean], CHART_AREA, tMax, vMax);
        if (idx === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
      ctx.lineWidth = 1;
      ctx.fillStyle = "#222";
      ctx.fillText(`${strategy} (mean of ${chart.lines.length} reps)`, 46, 14);
    }
  }
}
