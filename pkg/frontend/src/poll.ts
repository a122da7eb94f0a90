/** Alert feed cursor: polls GET /alerts and accumulates alerts in creation
 * order. The cursor comes from the server, so the feed never skips or repeats. */

import type { ApiClient } from './api.js';
import type { AlertWire } from './types.js';

export class AlertFeed {
  private cursor = 0;
  readonly alerts: AlertWire[] = [];

  constructor(private readonly api: ApiClient) {}

  /** One poll round; returns just the new alerts. */
  async tick(): Promise<AlertWire[]> {
    const response = await this.api.getAlerts(this.cursor);
    this.cursor = response.cursor;
    this.alerts.push(...response.alerts);
    return response.alerts;
  }

  get position(): number {
    return this.cursor;
  }
}

export function startPolling(feed: AlertFeed, onNew: (alerts: AlertWire[]) => void, intervalMs = 2000): () => void {
  let stopped = false;
  let timer: ReturnType<typeof setTimeout> | undefined;
  const loop = async () => {
    if (stopped) return;
    try {
      const fresh = await feed.tick();
      if (fresh.length > 0) {
        onNew(fresh);
      }
    } catch {
      // transient poll failure; next round retries
    }
    timer = setTimeout(loop, intervalMs);
  };
  void loop();
  return () => {
    stopped = true;
    if (timer !== undefined) {
      clearTimeout(timer);
    }
  };
}
