import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { compareLayers, layerRows, nsToMs, overridesLabel } from "../src/format.js";
import {
  renderAccuracyTable,
  renderAgentsTable,
  renderConstraintFeedback,
  renderEvaluation,
  renderLatencyTable,
  renderLayerComparison,
  renderLayerTable,
  renderModelsTable,
  renderPredictions,
  renderSideBySide,
} from "../src/render.js";
import type {
  AgentRecord,
  EvaluationResult,
  ModelEntry,
  SummaryTables,
  TraceSpan,
} from "../src/types.js";

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(__dirname, "..", "fixtures", name), "utf-8")) as T;
}

describe("browser tables", () => {
  it("renders one row per registered agent, field for field", () => {
    const agents = fixture<AgentRecord[]>("agents.json");
    const html = renderAgentsTable(agents);
    expect(agents.length).toBe(2);
    for (const agent of agents) {
      expect(html).toContain(agent.agent_id);
      expect(html).toContain(agent.address);
      expect(html).toContain(agent.hardware.architecture);
      for (const framework of agent.frameworks) {
        expect(html).toContain(`${framework.name} ${framework.version}`);
      }
    }
    expect(html).toMatchSnapshot();
  });

  it("renders the model catalog", () => {
    const models = fixture<ModelEntry[]>("models.json");
    const html = renderModelsTable(models);
    for (const model of models) {
      expect(html).toContain(model.name);
      expect(html).toContain(model.framework_constraint);
    }
    expect(html).toMatchSnapshot();
  });

  it("renders empty states", () => {
    expect(renderAgentsTable([])).toContain("No agents are registered");
    expect(renderModelsTable([])).toContain("No models");
  });

  it("renders inline constraint feedback", () => {
    expect(renderConstraintFeedback(null)).toBe(`<span class="ok"></span>`);
    expect(renderConstraintFeedback("malformed clause 'zzz'")).toContain("parse-error");
  });
});

describe("results view", () => {
  it("shows every prediction number exactly as the response carries it", () => {
    const result = fixture<EvaluationResult>("result_baseline.json");
    const outputs = result.results[0]!.outputs!;
    const html = renderPredictions(outputs);
    for (const prediction of outputs[0]!.predictions) {
      expect(html).toContain(String(prediction.probability));
      expect(html).toContain(prediction.label);
    }
    expect(html).toMatchSnapshot();
  });

  it("renders a ranked top-k list in rank order", () => {
    const result = fixture<EvaluationResult>("result_baseline.json");
    const html = renderPredictions(result.results[0]!.outputs!);
    const first = html.indexOf("red-dominant");
    const second = html.indexOf("green-dominant");
    expect(first).toBeGreaterThan(-1);
    expect(second).toBeGreaterThan(first);
  });

  it("renders a progress indicator while running", () => {
    const running = fixture<EvaluationResult>("result_running.json");
    const html = renderEvaluation(running);
    expect(html).toContain("running");
    expect(html).toContain("progress");
  });

  it("renders a failure banner with the reason", () => {
    const failed = fixture<EvaluationResult>("result_failed.json");
    const html = renderEvaluation(failed);
    expect(html).toContain("no-matching-agent");
    expect(html).toContain("error");
  });

  it("renders side-by-side flipped top-1 for baseline vs BGR", () => {
    const baseline = fixture<EvaluationResult>("result_baseline.json");
    const flipped = fixture<EvaluationResult>("result_flipped.json");
    const html = renderSideBySide(baseline, flipped);
    const panels = html.split(`<div class="panel">`);
    expect(panels.length).toBe(3);
    expect(panels[1]).toContain("baseline");
    expect(panels[2]).toContain("decode.color_layout=BGR");
    // top-1 flips between the panels
    expect(panels[1]!.indexOf("red-dominant")).toBeLessThan(panels[1]!.indexOf("blue-dominant"));
    expect(panels[2]!.indexOf("blue-dominant")).toBeLessThan(panels[2]!.indexOf("red-dominant"));
    expect(html).toMatchSnapshot();
  });
});

describe("summary tables", () => {
  it("accuracy table uses the response's preformatted fractions verbatim", () => {
    const tables: SummaryTables = {
      accuracy: [
        { model: "border-classifier", variant: "baseline", top1: "1.0000", top5: "1.0000" },
        { model: "border-classifier", variant: "crop.percentage=100.0", top1: "0.8000", top5: "1.0000" },
      ],
      latency: [],
    };
    const html = renderAccuracyTable(tables);
    expect(html).toContain("1.0000");
    expect(html).toContain("0.8000");
    expect(html).toContain("crop.percentage=100.0");
    expect(html).toMatchSnapshot();
  });

  it("latency table shows captured fixture values verbatim", () => {
    const tables = fixture<SummaryTables>("summary.json");
    const html = renderLatencyTable(tables);
    for (const row of tables.latency) {
      expect(html).toContain(row.latency_ms);
      expect(html).toContain(row.variant);
    }
  });
});

describe("layer latency tables", () => {
  it("builds rows with fused tags and library children", () => {
    const fused = fixture<EvaluationResult>("result_trace_fused.json");
    const rows = layerRows(fused.results[0]!.trace!);
    expect(rows).toHaveLength(1);
    expect(rows[0]!.name).toBe("conv2");
    expect(rows[0]!.fusedOf).toEqual(["conv2", "relu"]);
    expect(rows[0]!.durationNs).toBe(1_950_000);
    expect(rows[0]!.libraryCalls[0]!.name).toBe("trt_volta_scudnn_128x128");
  });

  it("renders the per-layer table with fused tag", () => {
    const fused = fixture<EvaluationResult>("result_trace_fused.json");
    const html = renderLayerTable(fused.results[0]!.trace!);
    expect(html).toContain("conv2");
    expect(html).toContain("[fused: conv2+relu]");
    expect(html).toContain("1.95");
    expect(html).toMatchSnapshot();
  });

  it("fused-vs-unfused comparison produces the delta column", () => {
    const fused = fixture<EvaluationResult>("result_trace_fused.json");
    const unfused = fixture<EvaluationResult>("result_trace_unfused.json");
    const rows = compareLayers(
      layerRows(fused.results[0]!.trace!),
      layerRows(unfused.results[0]!.trace!)
    );
    const matched = rows.find((row) => row.matched)!;
    expect(matched.layer).toBe("conv2+relu");
    expect(matched.aNs).toBe(1_950_000);
    expect(matched.bNs).toBe(2_630_000);
    expect(matched.deltaNs).toBe(-680_000);
    expect(nsToMs(matched.deltaNs!)).toBe("-0.68");

    const html = renderLayerComparison(
      fused.results[0]!.trace!,
      unfused.results[0]!.trace!,
      "fused",
      "unfused"
    );
    expect(html).toContain("1.95");
    expect(html).toContain("2.63");
    expect(html).toContain("-0.68");
    expect(html).toMatchSnapshot();
  });

  it("disjoint layer sets are flagged unmatched", () => {
    const a = layerRows([
      { span_id: "x", parent_id: null, level: "layer", name: "alpha", start_ns: 0, end_ns: 5, tags: {} },
    ] as TraceSpan[]);
    const b = layerRows([
      { span_id: "y", parent_id: null, level: "layer", name: "beta", start_ns: 0, end_ns: 7, tags: {} },
    ] as TraceSpan[]);
    const rows = compareLayers(a, b);
    expect(rows.every((row) => !row.matched)).toBe(true);
  });
});

describe("labels", () => {
  it("override labels are deterministic and sorted", () => {
    expect(overridesLabel({})).toBe("baseline");
    expect(
      overridesLabel({ decode: { color_layout: "BGR" }, crop: { percentage: 100 } })
    ).toBe("crop.percentage=100,decode.color_layout=BGR");
  });
});
