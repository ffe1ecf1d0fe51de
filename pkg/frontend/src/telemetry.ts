/**
 * History-review telemetry: open starts a session, heartbeats keep it
 * alive on a fixed cadence, close ends it. Posts are fire-and-forget with
 * a single retry so a flaky network never blocks the UI.
 */

import { ApiClient } from "./api.js";

const HEARTBEAT_MS = 30_000;

async function fireAndForget(post: () => Promise<void>): Promise<void> {
  try {
    await post();
  } catch {
    try {
      await post();
    } catch {
      // telemetry is best-effort by design
    }
  }
}

export class HistoryTelemetry {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: ApiClient,
    private heartbeatMs: number = HEARTBEAT_MS,
  ) {}

  get active(): boolean {
    return this.timer !== null;
  }

  async open(): Promise<void> {
    if (this.timer !== null) return;
    await fireAndForget(() => this.api.postEvent("history_open"));
    this.timer = setInterval(() => {
      void fireAndForget(() => this.api.postEvent("history_heartbeat"));
    }, this.heartbeatMs);
  }

  async close(): Promise<void> {
    if (this.timer === null) return;
    clearInterval(this.timer);
    this.timer = null;
    await fireAndForget(() => this.api.postEvent("history_close"));
  }
}

export function feedbackViewed(api: ApiClient, jobId: string): Promise<void> {
  return fireAndForget(() => api.postEvent("feedback_view", jobId));
}
