import assert from "node:assert/strict";
import { test } from "node:test";

import { DelayOverlay } from "../src/overlay.js";
import { parseEventStream, type DelayBatch } from "../src/sse.js";

function streamOf(chunks: string[]): ReadableStream<Uint8Array> {
  const encoder = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
      controller.close();
    },
  });
}

async function collect(stream: ReadableStream<Uint8Array>): Promise<unknown[]> {
  const out: unknown[] = [];
  for await (const event of parseEventStream(stream)) out.push(event);
  return out;
}

test("parses one event per data block", async () => {
  const events = await collect(streamOf(['data: {"t":1,"delays":[]}\n\ndata: {"t":2,"delays":[]}\n\n']));
  assert.deepEqual(events, [
    { t: 1, delays: [] },
    { t: 2, delays: [] },
  ]);
});

test("events split across chunk boundaries reassemble", async () => {
  const events = await collect(
    streamOf(['data: {"t":1,"de', 'lays":[{"link":"A-B","ms":6.0,"loss":false}]}\n', "\n"]),
  );
  assert.equal((events[0] as DelayBatch).delays[0]!.link, "A-B");
});

test("non-data lines are ignored", async () => {
  const events = await collect(streamOf([': keepalive\n\nevent: x\ndata: {"t":3,"delays":[]}\n\n']));
  assert.deepEqual(events, [{ t: 3, delays: [] }]);
});

test("overlay tracks labels, loss styling and clears on stream end", () => {
  const overlay = new DelayOverlay();
  assert.equal(overlay.styleFor("A-B"), null);
  overlay.applyBatch({
    t: 1,
    delays: [
      { link: "A-B", ms: 6, loss: false },
      { link: "B-C", ms: null, loss: true },
    ],
  });
  assert.deepEqual(overlay.styleFor("A-B"), { label: "6 ms", broken: false });
  assert.deepEqual(overlay.styleFor("B-C"), { label: "loss", broken: true });
  overlay.applyBatch({ t: 2, delays: [{ link: "B-C", ms: 8.4, loss: false }] });
  assert.deepEqual(overlay.styleFor("B-C"), { label: "8.4 ms", broken: false });
  assert.equal(overlay.batches, 2);
  overlay.clear();
  assert.equal(overlay.styleFor("A-B"), null);
  assert.equal(overlay.size(), 0);
});
