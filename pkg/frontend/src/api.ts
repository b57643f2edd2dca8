/** Thin fetch wrappers around the control plane. Only documented `/v1/`
 * endpoints are used. */

import { SessionStatus, SwapResult } from "./types.js";

export async function fetchStatus(base: string): Promise<SessionStatus> {
  const resp = await fetch(`${base}/v1/status`);
  if (!resp.ok) throw new Error(`status poll failed: HTTP ${resp.status}`);
  return (await resp.json()) as SessionStatus;
}

/** Upload a model (native JSON or PNML text). Non-2xx responses are returned
 * as a SwapResult so the caller can render the server's violation list. */
export async function postModel(base: string, body: string): Promise<SwapResult> {
  const resp = await fetch(`${base}/v1/model`, { method: "POST", body });
  return (await resp.json()) as SwapResult;
}

export async function postMultiplier(base: string, value: number): Promise<void> {
  const resp = await fetch(`${base}/v1/multiplier`, {
    method: "POST",
    body: JSON.stringify({ value }),
  });
  if (!resp.ok) {
    const doc = await resp.json().catch(() => ({ error: `HTTP ${resp.status}` }));
    throw new Error(doc.error ?? `HTTP ${resp.status}`);
  }
}

export async function postStop(base: string): Promise<void> {
  await fetch(`${base}/v1/stop`, { method: "POST", body: "" });
}
