/** Minimal server-sent-events reader over a fetch body stream.
 * Works in both browsers and node without an EventSource dependency. */

export interface LinkDelay {
  link: string;
  ms: number | null;
  loss: boolean;
}

export interface DelayBatch {
  t: number;
  delays: LinkDelay[];
}

/** Yield the JSON payload of every `data:` event in the stream. */
export async function* parseEventStream(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<unknown> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      for (;;) {
        const cut = buffer.indexOf("\n\n");
        if (cut < 0) break;
        const event = buffer.slice(0, cut);
        buffer = buffer.slice(cut + 2);
        const data = extractData(event);
        if (data !== null) yield JSON.parse(data);
      }
    }
    const tail = extractData(buffer);
    if (tail !== null) yield JSON.parse(tail);
  } finally {
    reader.releaseLock();
  }
}

function extractData(event: string): string | null {
  const lines = event.split("\n").filter((line) => line.startsWith("data:"));
  if (!lines.length) return null;
  return lines.map((line) => line.slice(5).trimStart()).join("\n");
}
