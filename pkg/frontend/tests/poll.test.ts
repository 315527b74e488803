import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Poller } from "../src/poll.js";

function jsonResponse(body: unknown): Response {
  return new Response(JSON.stringify(body), { status: 200 });
}

describe("poller", () => {
  it("deduplicates concurrent polls of the same evaluation", async () => {
    let gets = 0;
    const states = ["pending", "running", "done"];
    const fetchFn = async (): Promise<Response> => {
      const state = states[Math.min(gets, states.length - 1)];
      gets++;
      return jsonResponse({ evaluation_id: "e1", state, request: {}, results: [] });
    };
    const api = new ApiClient("http://r", "http://o", fetchFn as never);

    const pending: (() => void)[] = [];
    const manual = (fn: () => void) => {
      pending.push(fn);
    };
    const poller = new Poller(api, 1000, manual as never);

    const seenA: string[] = [];
    const seenB: string[] = [];
    poller.track("e1", (result) => seenA.push(result.state));
    poller.track("e1", (result) => seenB.push(result.state));  // joins, no second loop
    await Promise.resolve();
    await new Promise((resolve) => setTimeout(resolve, 0));

    expect(gets).toBe(1); // one in-flight cycle despite two trackers
    expect(poller.isTracking("e1")).toBe(true);

    while (poller.isTracking("e1")) {
      const next = pending.shift();
      expect(next).toBeDefined();
      next!();
      await new Promise((resolve) => setTimeout(resolve, 0));
    }
    expect(gets).toBe(3); // pending, running, done — once each
    expect(seenA).toEqual(["pending", "running", "done"]);
    expect(seenB).toEqual(["pending", "running", "done"]);
  });

  it("stops at a terminal state and can re-track afterwards", async () => {
    let gets = 0;
    const fetchFn = async (): Promise<Response> => {
      gets++;
      return jsonResponse({ evaluation_id: "e2", state: "done", request: {}, results: [] });
    };
    const api = new ApiClient("http://r", "http://o", fetchFn as never);
    const poller = new Poller(api, 0, ((fn: () => void) => fn()) as never);

    await new Promise<void>((resolve) => poller.track("e2", () => resolve()));
    expect(poller.isTracking("e2")).toBe(false);
    expect(gets).toBe(1);

    await new Promise<void>((resolve) => poller.track("e2", () => resolve()));
    expect(gets).toBe(2);
  });

  it("keeps polling through transient fetch failures", async () => {
    let calls = 0;
    const fetchFn = async (): Promise<Response> => {
      calls++;
      if (calls === 1) throw new Error("connection refused");
      return jsonResponse({ evaluation_id: "e3", state: "done", request: {}, results: [] });
    };
    const api = new ApiClient("http://r", "http://o", fetchFn as never);
    const poller = new Poller(api, 0, ((fn: () => void) => fn()) as never);
    await new Promise<void>((resolve) => poller.track("e3", () => resolve()));
    expect(calls).toBe(2);
  });
});
