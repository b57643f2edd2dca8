/** Wire shapes of the control plane (`/v1/*`) and the event feed. */

export interface WireEvent {
  case: string;
  activity: string;
  timestamp: number; // wall-clock ms at emission
  lifecycle: string;
  attrs: Record<string, unknown>;
  sim_time?: number; // original simulated ms
}

export interface SessionStatus {
  running: boolean;
  events_emitted: number;
  traces_generated: number;
  buffer_size: number;
  current_model_name: string;
  time_multiplier: number;
  connected_clients: number;
  recent_events: WireEvent[];
}

export interface Violation {
  code: string;
  message: string;
  components: string[];
}

export interface SwapResult {
  ok: boolean;
  model?: string;
  error?: string;
  violations?: Violation[];
}

export type FeedFrame =
  | { kind: "event"; payload: WireEvent }
  | { kind: "status"; payload: SessionStatus };
