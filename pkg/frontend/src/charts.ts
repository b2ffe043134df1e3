/** Chart models for the experiment panel. Pure math here; the canvas layer
 * just draws what these produce. */

import type { RunSummaryDoc, SeriesDoc } from "./api.js";

export interface SeriesLine {
  repetition: number;
  points: [number, number][];
}

export interface BandPoint {
  t: number;
  mean: number;
  min: number;
  max: number;
}

export class ThroughputChart {
  lines: SeriesLine[] = [];

  static fromSummaries(summaries: RunSummaryDoc[], subject: string): ThroughputChart {
    const chart = new ThroughputChart();
    for (const summary of summaries) {
      const series = summary.series.find(
        (s) => s.metric === "throughput_mbps" && s.subject === subject,
      );
      if (series) chart.addRepetition(summary.repetition, series);
    }
    return chart;
  }

  addRepetition(repetition: number, series: SeriesDoc): void {
    const points: [number, number][] = [];
    for (const [t, v] of series.points) {
      if (v !== null) points.push([t, v]);
    }
    this.lines.push({ repetition, points });
  }

  /** Per-bucket mean with min/max envelope across repetitions. */
  meanBand(): BandPoint[] {
    const byBucket = new Map<number, number[]>();
    for (const line of this.lines) {
      for (const [t, v] of line.points) {
        const bucket = byBucket.get(t);
        if (bucket) bucket.push(v);
        else byBucket.set(t, [v]);
      }
    }
    return [...byBucket.entries()]
      .sort(([a], [b]) => a - b)
      .map(([t, values]) => ({
        t,
        mean: values.reduce((acc, v) => acc + v, 0) / values.length,
        min: Math.min(...values),
        max: Math.max(...values),
      }));
  }

  /** Mean of band means over bucket starts in [t0, t1). */
  windowedMean(t0: number, t1: number): number {
    const band = this.meanBand().filter((p) => p.t >= t0 && p.t < t1);
    if (!band.length) return 0;
    return band.reduce((acc, p) => acc + p.mean, 0) / band.length;
  }

  /** Post-failure goodput relative to the window just before it. */
  failureRatio(failAtS: number, windowS = 2): number {
    const pre = this.windowedMean(failAtS - windowS, failAtS);
    if (pre === 0) return 0;
    return this.windowedMean(failAtS, failAtS + windowS) / pre;
  }

  maxValue(): number {
    let max = 0;
    for (const line of this.lines) {
      for (const [, v] of line.points) if (v > max) max = v;
    }
    return max;
  }
}

export interface PlotArea {
  width: number;
  height: number;
  padLeft: number;
  padBottom: number;
  padTop: number;
  padRight: number;
}

/** Map a (t, value) point into pixel coordinates for a plot area. */
export function toPixels(
  point: [number, number],
  area: PlotArea,
  tMax: number,
  vMax: number,
): [number, number] {
  const innerW = area.width - area.padLeft - area.padRight;
  const innerH = area.height - area.padTop - area.padBottom;
  const x = area.padLeft + (tMax > 0 ? (point[0] / tMax) * innerW : 0);
  const y = area.height - area.padBottom - (vMax > 0 ? (point[1] / vMax) * innerH : 0);
  return [x, y];
}
