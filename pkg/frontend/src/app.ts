/** Page wiring: binds the view-model to the DOM. Browser-only. */

import { fetchStatus, postModel, postMultiplier } from "./api.js";
import { FeedClient } from "./feed.js";
import { SessionView, caseColor, validateMultiplier } from "./viewmodel.js";

const STATUS_POLL_MS = 2000;
const RENDER_MS = 250;
const BIN_MS = 500;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
}

export function boot(base: string = ""): () => void {
  const view = new SessionView();
  const feed = new FeedClient(
    base,
    (frame) => view.applyFrame(frame, Date.now()),
    (connected) => {
      view.feedConnected = connected;
    },
  );
  feed.start();

  const pollTimer = setInterval(async () => {
    try {
      view.applyStatus(await fetchStatus(base));
    } catch (err) {
      view.statusFailed(err instanceof Error ? err.message : String(err));
    }
    renderStatus(view);
  }, STATUS_POLL_MS);

  const renderTimer = setInterval(() => renderPreview(view), RENDER_MS);

  ($("model-file") as HTMLInputElement).addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    view.applySwapResult(await postModel(base, await file.text()));
    renderSwap(view);
    input.value = "";
  });

  $("multiplier-apply").addEventListener("click", async () => {
    const raw = ($("multiplier") as HTMLInputElement).value;
    const check = validateMultiplier(raw);
    const out = $("multiplier-result");
    if (!check.ok) {
      out.textContent = check.error ?? "invalid";
      out.className = "error";
      return;
    }
    try {
      await postMultiplier(base, check.value!);
      out.textContent = `multiplier set to ${check.value}`;
      out.className = "ok";
    } catch (err) {
      out.textContent = err instanceof Error ? err.message : String(err);
      out.className = "error";
    }
  });

  return () => {
    feed.stop();
    clearInterval(pollTimer);
    clearInterval(renderTimer);
  };
}

function renderStatus(view: SessionView): void {
  const banner = $("banner");
  if (view.statusError !== null) {
    banner.textContent = `backend unreachable: ${view.statusError}`;
    banner.style.display = "block";
  } else {
    banner.style.display = "none";
  }
  const s = view.status;
  $("stat-emitted").textContent = s ? String(s.events_emitted) : "—";
  $("stat-buffer").textContent = s ? String(s.buffer_size) : "—";
  $("stat-clients").textContent = s ? String(s.connected_clients) : "—";
  $("stat-multiplier").textContent = s ? String(s.time_multiplier) : "—";
  $("stat-model").textContent = s ? s.current_model_name : "—";
}

function renderPreview(view: SessionView): void {
  const strip = $("strip");
  strip.textContent = "";
  for (const bin of view.preview.bins(Date.now(), BIN_MS)) {
    const col = document.createElement("div");
    col.className = "bin";
    for (const dot of bin.dots) {
      const el = document.createElement("span");
      el.className = "dot";
      el.style.background = caseColor(dot.cases[0]);
      el.title = dot.cases.join(", ");
      col.appendChild(el);
    }
    strip.appendChild(col);
  }
  const alphabet = [...view.preview.alphabet(Date.now())].sort();
  $("alphabet").textContent = alphabet.join("  ") || "(no events in the last 30 s)";
}

function renderSwap(view: SessionView): void {
  const out = $("swap-result");
  out.textContent = view.swapMessage();
  out.className = view.lastSwap?.ok ? "ok" : "error";
}
