/**
 * Result polling: one timer per evaluation at a fixed cadence, with
 * per-evaluation dedup so repeated submits of the same id never stack
 * concurrent polls. Polling stops at a terminal state.
 */

import type { ApiClient } from "./api.js";
import type { EvaluationResult } from "./types.js";

export type ResultListener = (result: EvaluationResult) => void;

const TERMINAL_STATES = new Set(["done", "failed"]);

export class Poller {
  private readonly active = new Map<string, ResultListener[]>();

  constructor(
    private readonly api: ApiClient,
    private readonly intervalMs = 1000,
    private readonly schedule: (fn: () => void, ms: number) => unknown = setTimeout
  ) {}

  /** True when the id is being polled right now. */
  isTracking(evaluationId: string): boolean {
    return this.active.has(evaluationId);
  }

  /**
   * Start polling an evaluation; if it is already being polled, the
   * listener joins the existing cycle instead of starting another.
   */
  track(evaluationId: string, listener: ResultListener): void {
    const existing = this.active.get(evaluationId);
    if (existing) {
      existing.push(listener);
      return;
    }
    this.active.set(evaluationId, [listener]);
    void this.cycle(evaluationId);
  }

  private async cycle(evaluationId: string): Promise<void> {
    const listeners = this.active.get(evaluationId);
    if (!listeners) return;
    let result: EvaluationResult | null = null;
    try {
      result = await this.api.result(evaluationId);
    } catch {
      // transient fetch error: keep polling
    }
    if (result) {
      for (const listener of listeners) listener(result);
      if (TERMINAL_STATES.has(result.state)) {
        this.active.delete(evaluationId);
        return;
      }
    }
    this.schedule(() => void this.cycle(evaluationId), this.intervalMs);
  }
}
