/** Live link-delay overlay state: one labelled measurement per edge,
 * refreshed per probe batch; a lost probe renders the edge broken. */

import type { DelayBatch } from "./sse.js";

export interface EdgeStyle {
  label: string;
  broken: boolean;
}

export class DelayOverlay {
  private measurements = new Map<string, { ms: number | null; loss: boolean }>();
  lastBatchAt: number | null = null;
  batches = 0;

  applyBatch(batch: DelayBatch): void {
    for (const entry of batch.delays) {
      this.measurements.set(entry.link, { ms: entry.ms, loss: entry.loss });
    }
    this.lastBatchAt = batch.t;
    this.batches += 1;
  }

  /** Stream over: forget everything so the canvas drops its labels. */
  clear(): void {
    this.measurements.clear();
    this.lastBatchAt = null;
  }

  styleFor(linkKey: string): EdgeStyle | null {
    const m = this.measurements.get(linkKey);
    if (!m) return null;
    if (m.loss || m.ms === null) return { label: "loss", broken: true };
    return { label: `${formatMs(m.ms)} ms`, broken: false };
  }

  size(): number {
    return this.measurements.size;
  }
}

function formatMs(ms: number): string {
  return Number.isInteger(ms) ? String(ms) : ms.toFixed(1);
}
