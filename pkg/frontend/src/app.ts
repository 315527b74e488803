/**
 * DOM shell: wires the browser page to the API client, composer,
 * poller, and renderers. All rendering goes through the pure functions
 * in render.ts; this file only moves strings in and out of the page.
 */

import { ApiClient } from "./api.js";
import {
  ComposerState,
  buildRequestPair,
  emptyComposerState,
  validateComposerState,
} from "./composer.js";
import { validateConstraintText } from "./constraints.js";
import { Poller } from "./poll.js";
import {
  renderAccuracyTable,
  renderAgentsTable,
  renderConstraintFeedback,
  renderEvaluation,
  renderLatencyTable,
  renderModelsTable,
  renderSideBySide,
} from "./render.js";
import type { EvaluationResult } from "./types.js";

interface RuntimeConfig {
  registry: string;
  orchestrator: string;
}

declare global {
  interface Window {
    EVALSCOPE?: Partial<RuntimeConfig>;
  }
}

function config(): RuntimeConfig {
  return {
    registry: window.EVALSCOPE?.registry ?? "http://127.0.0.1:8070",
    orchestrator: window.EVALSCOPE?.orchestrator ?? "http://127.0.0.1:8080",
  };
}

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing element #${id}`);
  return element as T;
}

const state: ComposerState = emptyComposerState();

export async function start(): Promise<void> {
  const { registry, orchestrator } = config();
  const api = new ApiClient(registry, orchestrator);
  const poller = new Poller(api);

  const browser = byId<HTMLDivElement>("browser");
  const modelSelect = byId<HTMLSelectElement>("model-select");
  const results = byId<HTMLDivElement>("results");
  const summaryBox = byId<HTMLDivElement>("summary");

  async function refreshBrowser(): Promise<void> {
    try {
      const [agents, models] = await Promise.all([api.agents(), api.models()]);
      browser.innerHTML =
        `<h2>Agents</h2>` + renderAgentsTable(agents) +
        `<h2>Models</h2>` + renderModelsTable(models);
      modelSelect.innerHTML = models
        .map((m) => `<option value="${m.name}">${m.name} ${m.version} (${m.task})</option>`)
        .join("");
      if (models.length > 0 && !state.modelName) {
        state.modelName = models[0]!.name;
      }
    } catch (error) {
      browser.innerHTML = `<p class="banner error">cannot reach services: ${String(error)}</p>`;
    }
  }

  async function refreshSummary(): Promise<void> {
    try {
      const tables = await api.summary();
      summaryBox.innerHTML =
        `<h2>Accuracy</h2>` + renderAccuracyTable(tables) +
        `<h2>Latency</h2>` + renderLatencyTable(tables);
    } catch {
      summaryBox.innerHTML = "";
    }
  }

  function bindConstraintField(inputId: string, feedbackId: string, assign: (v: string) => void): void {
    const input = byId<HTMLInputElement>(inputId);
    const feedback = byId<HTMLSpanElement>(feedbackId);
    input.addEventListener("input", () => {
      assign(input.value);
      feedback.innerHTML = input.value
        ? renderConstraintFeedback(validateConstraintText(input.value))
        : renderConstraintFeedback(null);
    });
  }

  bindConstraintField("model-constraint", "model-constraint-feedback", (v) => {
    state.modelConstraint = v || "x";
  });
  bindConstraintField("framework-constraint", "framework-constraint-feedback", (v) => {
    state.frameworkConstraint = v;
  });

  modelSelect.addEventListener("change", () => {
    state.modelName = modelSelect.value;
  });
  byId<HTMLInputElement>("framework-name").addEventListener("input", (event) => {
    state.frameworkName = (event.target as HTMLInputElement).value;
  });
  byId<HTMLSelectElement>("dispatch-mode").addEventListener("change", (event) => {
    state.dispatchMode = (event.target as HTMLSelectElement).value as "one" | "all";
  });
  byId<HTMLSelectElement>("trace-level").addEventListener("change", (event) => {
    state.traceLevel = (event.target as HTMLSelectElement).value;
  });
  for (const [checkboxId, key] of [
    ["toggle-bgr", "bgrColorLayout"],
    ["toggle-nocrop", "skipCrop"],
    ["toggle-fastdct", "fastDct"],
  ] as const) {
    byId<HTMLInputElement>(checkboxId).addEventListener("change", (event) => {
      state.toggles[key] = (event.target as HTMLInputElement).checked;
    });
  }

  byId<HTMLInputElement>("image-input").addEventListener("change", async (event) => {
    const files = (event.target as HTMLInputElement).files;
    state.inputs = [];
    if (!files) return;
    for (const file of Array.from(files)) {
      const buffer = await file.arrayBuffer();
      const bytes = new Uint8Array(buffer);
      let binary = "";
      for (const byte of bytes) binary += String.fromCharCode(byte);
      state.inputs.push({ name: file.name, data_b64: btoa(binary) });
    }
  });

  byId<HTMLButtonElement>("submit").addEventListener("click", async () => {
    const problems = validateComposerState(state);
    if (problems.length > 0) {
      results.innerHTML = `<p class="banner error">${problems
        .map((p) => `${p.field}: ${p.message}`)
        .join("<br>")}</p>`;
      return;
    }
    const { baseline, variant } = buildRequestPair(state);
    results.innerHTML = `<p class="progress">submitting…</p>`;
    try {
      const baselineId = await api.submit(baseline);
      const latest: { baseline?: EvaluationResult; variant?: EvaluationResult } = {};

      const repaint = () => {
        if (latest.baseline && latest.variant) {
          results.innerHTML = renderSideBySide(latest.baseline, latest.variant);
        } else if (latest.baseline) {
          results.innerHTML = renderEvaluation(latest.baseline);
        }
        void refreshSummary();
      };

      poller.track(baselineId, (result) => {
        latest.baseline = result;
        repaint();
      });
      if (variant) {
        const variantId = await api.submit(variant);
        poller.track(variantId, (result) => {
          latest.variant = result;
          repaint();
        });
      }
    } catch (error) {
      results.innerHTML = `<p class="banner error">${String(error)}</p>`;
    }
  });

  await refreshBrowser();
  await refreshSummary();
}

if (typeof document !== "undefined" && document.getElementById("browser")) {
  void start();
}
