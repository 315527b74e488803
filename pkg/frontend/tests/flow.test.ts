/**
 * End-to-end composer flow against a fixture orchestrator: build the
 * request pair with the BGR toggle, submit both, poll to completion,
 * and render the side-by-side view — all over captured responses.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { buildRequestPair, emptyComposerState, togglesToOverrides, validateComposerState } from "../src/composer.js";
import { Poller } from "../src/poll.js";
import { renderSideBySide } from "../src/render.js";
import type { EvaluationResult } from "../src/types.js";

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(__dirname, "..", "fixtures", name), "utf-8")) as T;
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Fixture orchestrator: first poll returns running, then the captured result. */
function fixtureOrchestrator() {
  const baseline = fixture<EvaluationResult>("result_baseline.json");
  const flipped = fixture<EvaluationResult>("result_flipped.json");
  const running = fixture<EvaluationResult>("result_running.json");
  const submits: unknown[] = [];
  const polls: Record<string, number> = {};

  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    if (url.endsWith("/evaluations") && init?.method === "POST") {
      const body = JSON.parse(String(init.body));
      submits.push(body);
      const overrides = body.pipeline_overrides ?? {};
      const id = Object.keys(overrides).length > 0 ? "eval-variant" : "eval-baseline";
      return jsonResponse({ evaluation_id: id }, 202);
    }
    const match = /\/evaluations\/([^/?]+)$/.exec(url);
    if (match) {
      const id = match[1]!;
      polls[id] = (polls[id] ?? 0) + 1;
      if (polls[id] === 1) return jsonResponse({ ...running, evaluation_id: id });
      return jsonResponse(id === "eval-variant" ? flipped : baseline);
    }
    return jsonResponse({ error: `no fixture for ${url}` }, 404);
  };

  return { fetchFn, submits, polls };
}

describe("composer flow with the BGR toggle", () => {
  it("submits baseline + variant and renders flipped top-1 side by side", async () => {
    const { fetchFn, submits, polls } = fixtureOrchestrator();
    const api = new ApiClient("http://registry", "http://orchestrator", fetchFn);
    const immediate = (fn: () => void) => fn();
    const poller = new Poller(api, 0, immediate as never);

    const state = emptyComposerState();
    state.modelName = "rgb-reference";
    state.modelConstraint = "^1.x";
    state.frameworkName = "reference";
    state.frameworkConstraint = "^1.x";
    state.traceLevel = "layer";
    state.toggles.bgrColorLayout = true;
    state.inputs = [{ name: "red_4x5.ppm", data_b64: "UDY..." }];

    expect(validateComposerState(state)).toEqual([]);
    const { baseline, variant } = buildRequestPair(state);
    expect(baseline.pipeline_overrides).toEqual({});
    expect(variant).not.toBeNull();
    expect(variant!.pipeline_overrides).toEqual({ decode: { color_layout: "BGR" } });

    const baselineId = await api.submit(baseline);
    const variantId = await api.submit(variant!);
    expect(baselineId).toBe("eval-baseline");
    expect(variantId).toBe("eval-variant");
    expect(submits).toHaveLength(2);

    const latest: { baseline?: EvaluationResult; variant?: EvaluationResult } = {};
    await new Promise<void>((resolve) => {
      let doneCount = 0;
      const onDone = (slot: "baseline" | "variant") => (result: EvaluationResult) => {
        latest[slot] = result;
        if (result.state === "done" && ++doneCount === 2) resolve();
      };
      poller.track(baselineId, onDone("baseline"));
      poller.track(variantId, onDone("variant"));
    });

    // each evaluation was polled through a running state to completion
    expect(polls["eval-baseline"]).toBeGreaterThanOrEqual(2);
    expect(polls["eval-variant"]).toBeGreaterThanOrEqual(2);

    const html = renderSideBySide(latest.baseline!, latest.variant!);
    const panels = html.split(`<div class="panel">`);
    const baselineTop = latest.baseline!.results[0]!.outputs![0]!.predictions[0]!;
    const variantTop = latest.variant!.results[0]!.outputs![0]!.predictions[0]!;
    expect(baselineTop.label).toBe("red-dominant");
    expect(variantTop.label).toBe("blue-dominant");
    // the rendered panels carry exactly the response's numbers
    expect(panels[1]).toContain(String(baselineTop.probability));
    expect(panels[2]).toContain(String(variantTop.probability));
    expect(panels[1]!.indexOf(baselineTop.label)).toBeLessThan(panels[1]!.indexOf("blue-dominant"));
    expect(panels[2]!.indexOf(variantTop.label)).toBeLessThan(panels[2]!.indexOf("red-dominant"));
  });

  it("toggle mapping covers crop and dct toggles without reordering", () => {
    expect(
      togglesToOverrides({ bgrColorLayout: true, skipCrop: true, fastDct: true })
    ).toEqual({
      decode: { color_layout: "BGR", dct_method: "integer_fast" },
      crop: { percentage: 100.0 },
    });
    expect(togglesToOverrides({ bgrColorLayout: false, skipCrop: false, fastDct: false })).toEqual({});
  });

  it("rejects submission with a constraint typo", () => {
    const state = emptyComposerState();
    state.modelName = "rgb-reference";
    state.modelConstraint = "not a constraint";
    state.inputs = [{ name: "x", data_b64: "" }];
    const errors = validateComposerState(state);
    expect(errors.some((e) => e.field === "model_constraint")).toBe(true);
    expect(() => buildRequestPair(state)).toThrow(/model_constraint/);
  });
});
