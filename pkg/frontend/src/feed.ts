/** Streamed-fetch subscription to `/v1/feed` with automatic reconnect.
 *
 * Uses fetch + ReadableStream rather than EventSource so the same client
 * runs in the browser and under Node in the contract test.
 */

import { SseParser } from "./sse.js";
import { backoffMs } from "./viewmodel.js";
import { FeedFrame } from "./types.js";

export type FrameHandler = (frame: FeedFrame) => void;
export type StateHandler = (connected: boolean) => void;

export class FeedClient {
  private stopped = false;
  private attempt = 0;
  private controller: AbortController | null = null;

  constructor(
    private base: string,
    private onFrame: FrameHandler,
    private onState: StateHandler = () => {},
  ) {}

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.readOnce();
      } catch {
        // fall through to reconnect
      }
      this.onState(false);
      if (this.stopped) return;
      await sleep(backoffMs(this.attempt++));
    }
  }

  private async readOnce(): Promise<void> {
    this.controller = new AbortController();
    const resp = await fetch(`${this.base}/v1/feed`, {
      signal: this.controller.signal,
    });
    if (!resp.ok || resp.body === null) {
      throw new Error(`feed unavailable: HTTP ${resp.status}`);
    }
    this.onState(true);
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
        this.attempt = 0; // healthy stream: reset the backoff ladder
        this.onFrame(frame);
      }
      if (this.stopped) return;
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
