/** Pure view-model logic for the stream dashboard.
 *
 * Everything here is DOM-free so it can be unit-tested directly; `app.ts`
 * binds it to the page.
 */

import { FeedFrame, SessionStatus, SwapResult, WireEvent } from "./types.js";

/** Rolling preview shows the last 30 seconds of the stream. */
export const PREVIEW_WINDOW_MS = 30_000;

/** Hard cap on client-side buffered events; oldest dropped first. */
export const MAX_BUFFERED_EVENTS = 2000;

/** One preview dot aggregates up to this many events. */
export const EVENTS_PER_DOT = 3;

export interface TimedEvent {
  receivedAt: number; // client wall clock, ms
  event: WireEvent;
}

export interface Dot {
  /** case ids of the aggregated events (1..EVENTS_PER_DOT of them) */
  cases: string[];
}

export interface Bin {
  startMs: number;
  dots: Dot[];
}

/** Bounded rolling buffer of received events, evicted by wall clock. */
export class PreviewWindow {
  private items: TimedEvent[] = [];

  push(event: WireEvent, now: number): void {
    this.items.push({ receivedAt: now, event });
    if (this.items.length > MAX_BUFFERED_EVENTS) {
      this.items.splice(0, this.items.length - MAX_BUFFERED_EVENTS);
    }
    this.evict(now);
  }

  evict(now: number): void {
    const cutoff = now - PREVIEW_WINDOW_MS;
    let drop = 0;
    while (drop < this.items.length && this.items[drop].receivedAt < cutoff) drop++;
    if (drop > 0) this.items.splice(0, drop);
  }

  events(now?: number): TimedEvent[] {
    if (now !== undefined) this.evict(now);
    return this.items.slice();
  }

  /** Distinct activity names currently inside the window. */
  alphabet(now?: number): Set<string> {
    return new Set(this.events(now).map((it) => it.event.activity));
  }

  size(): number {
    return this.items.length;
  }

  clear(): void {
    this.items = [];
  }

  /** Time-binned dot strip: window split into fixed bins, each bin rendered
   * as ceil(n / EVENTS_PER_DOT) dots so one dot never stands for more than
   * EVENTS_PER_DOT events. */
  bins(now: number, binMs: number): Bin[] {
    this.evict(now);
    const start = now - PREVIEW_WINDOW_MS;
    const count = Math.ceil(PREVIEW_WINDOW_MS / binMs);
    const out: Bin[] = [];
    for (let i = 0; i < count; i++) {
      out.push({ startMs: start + i * binMs, dots: [] });
    }
    const grouped: TimedEvent[][] = out.map(() => []);
    for (const it of this.items) {
      const idx = Math.min(count - 1, Math.floor((it.receivedAt - start) / binMs));
      if (idx >= 0) grouped[idx].push(it);
    }
    grouped.forEach((evs, i) => {
      for (let j = 0; j < evs.length; j += EVENTS_PER_DOT) {
        out[i].dots.push({
          cases: evs.slice(j, j + EVENTS_PER_DOT).map((e) => e.event.case),
        });
      }
    });
    return out;
  }
}

/** Stable case-id -> color mapping (same case always gets the same hue). */
export function caseColor(caseId: string): string {
  let hash = 0;
  for (let i = 0; i < caseId.length; i++) {
    hash = (hash * 31 + caseId.charCodeAt(i)) | 0;
  }
  const hue = ((hash % 360) + 360) % 360;
  return `hsl(${hue}, 70%, 55%)`;
}

export interface MultiplierCheck {
  ok: boolean;
  value?: number;
  error?: string;
}

/** Client-side gate for the multiplier control: must parse to a number > 0. */
export function validateMultiplier(raw: string | number): MultiplierCheck {
  const value = typeof raw === "number" ? raw : Number(raw.trim());
  if (raw === "" || Number.isNaN(value)) {
    return { ok: false, error: "multiplier must be a number" };
  }
  if (!(value > 0)) {
    return { ok: false, error: "multiplier must be > 0" };
  }
  return { ok: true, value };
}

/** Server rejection -> display lines; messages are passed through verbatim. */
export function violationLines(result: SwapResult): string[] {
  if (result.ok) return [];
  if (!result.violations || result.violations.length === 0) {
    return [result.error ?? "upload rejected"];
  }
  return result.violations.map((v) => {
    const where = v.components.length ? ` (${v.components.join(", ")})` : "";
    return `${v.code}: ${v.message}${where}`;
  });
}

/** Reconnect backoff: 0.5 s doubling up to 10 s. */
export function backoffMs(attempt: number): number {
  return Math.min(500 * 2 ** Math.max(0, attempt), 10_000);
}

/** Aggregate state behind the page: status panel, preview, upload result. */
export class SessionView {
  status: SessionStatus | null = null;
  statusError: string | null = null;
  preview = new PreviewWindow();
  lastSwap: SwapResult | null = null;
  feedConnected = false;

  applyStatus(status: SessionStatus): void {
    this.status = status;
    this.statusError = null;
  }

  /** A failed poll invalidates the snapshot: never show stale data as live. */
  statusFailed(error: string): void {
    this.status = null;
    this.statusError = error;
  }

  applyFrame(frame: FeedFrame, now: number): void {
    if (frame.kind === "event") {
      this.preview.push(frame.payload, now);
    } else {
      this.applyStatus(frame.payload);
    }
  }

  applySwapResult(result: SwapResult): void {
    this.lastSwap = result;
  }

  swapMessage(): string {
    if (this.lastSwap === null) return "";
    if (this.lastSwap.ok) return `model swapped: ${this.lastSwap.model}`;
    return violationLines(this.lastSwap).join("\n");
  }
}
