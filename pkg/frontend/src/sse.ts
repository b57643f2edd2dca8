/** Minimal incremental server-sent-events parser for the `/v1/feed` stream.
 *
 * Works on raw text chunks so the same code runs in the browser (streamed
 * fetch) and under Node in tests.
 */

import { FeedFrame } from "./types.js";

export class SseParser {
  private buf = "";

  /** Feed a raw chunk; returns every complete frame it closed. */
  feed(chunk: string): FeedFrame[] {
    this.buf += chunk;
    const frames: FeedFrame[] = [];
    let sep: number;
    while ((sep = this.buf.indexOf("\n\n")) !== -1) {
      const block = this.buf.slice(0, sep);
      this.buf = this.buf.slice(sep + 2);
      const frame = parseBlock(block);
      if (frame !== null) frames.push(frame);
    }
    return frames;
  }
}

function parseBlock(block: string): FeedFrame | null {
  let kind = "message";
  const dataLines: string[] = [];
  for (const line of block.split("\n")) {
    if (line.startsWith("event:")) kind = line.slice(6).trim();
    else if (line.startsWith("data:")) dataLines.push(line.slice(5).trim());
  }
  if (dataLines.length === 0) return null;
  if (kind !== "event" && kind !== "status") return null;
  try {
    return { kind, payload: JSON.parse(dataLines.join("\n")) } as FeedFrame;
  } catch {
    return null; // malformed frame; drop, keep the stream alive
  }
}
