/**
 * Pure renderers: response JSON in, HTML strings out.
 *
 * Presentation only — every number shown is a field of a GET response
 * (or a fixed-format ns-to-ms view of one); the snapshot tests compare
 * rendered values field-for-field against captured fixture responses.
 */

import { compareLayers, escapeHtml, layerRows, nsToMs, overridesLabel } from "./format.js";
import type {
  AgentRecord,
  AgentResult,
  EvaluationResult,
  ModelEntry,
  OutputBlock,
  SummaryTables,
  TraceSpan,
} from "./types.js";

export function renderAgentsTable(agents: AgentRecord[]): string {
  if (agents.length === 0) {
    return `<p class="empty">No agents are registered. Start an agent and it will publish itself here.</p>`;
  }
  const rows = agents
    .map((agent) => {
      const frameworks = agent.frameworks
        .map((f) => `${escapeHtml(f.name)} ${escapeHtml(f.version)}`)
        .join(", ");
      const models = agent.models
        .map((m) => `${escapeHtml(m.name)} ${escapeHtml(m.version)}`)
        .join(", ");
      const devices = agent.hardware.device_classes.join(", ");
      const interconnect = agent.hardware.interconnect ?? "";
      return (
        `<tr><td>${escapeHtml(agent.agent_id)}</td><td>${escapeHtml(agent.address)}</td>` +
        `<td>${escapeHtml(agent.hardware.architecture)}</td><td>${escapeHtml(devices)}</td>` +
        `<td>${escapeHtml(interconnect)}</td><td>${frameworks}</td><td>${models}</td></tr>`
      );
    })
    .join("");
  return (
    `<table class="agents"><thead><tr><th>Agent</th><th>Address</th><th>Arch</th>` +
    `<th>Devices</th><th>Interconnect</th><th>Frameworks</th><th>Models</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderModelsTable(models: ModelEntry[]): string {
  if (models.length === 0) {
    return `<p class="empty">No models in the catalog.</p>`;
  }
  const rows = models
    .map(
      (m) =>
        `<tr><td>${escapeHtml(m.name)}</td><td>${escapeHtml(m.version)}</td>` +
        `<td>${escapeHtml(m.task)}</td><td>${escapeHtml(m.framework_name)} ` +
        `${escapeHtml(m.framework_constraint)}</td></tr>`
    )
    .join("");
  return (
    `<table class="models"><thead><tr><th>Model</th><th>Version</th><th>Task</th>` +
    `<th>Framework</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderConstraintFeedback(error: string | null): string {
  if (error === null) return `<span class="ok"></span>`;
  return `<span class="parse-error">${escapeHtml(error)}</span>`;
}

export function renderPredictions(outputs: OutputBlock[]): string {
  return outputs
    .map((block) => {
      const rows = block.predictions
        .map(
          (p) =>
            `<tr><td>${p.rank}</td><td>${escapeHtml(p.label)}</td>` +
            `<td class="num">${String(p.probability)}</td></tr>`
        )
        .join("");
      return (
        `<div class="predictions"><h4>${escapeHtml(block.input)}</h4>` +
        `<table><thead><tr><th>Rank</th><th>Label</th><th>Probability</th></tr></thead>` +
        `<tbody>${rows}</tbody></table></div>`
      );
    })
    .join("");
}

export function renderAccuracyTable(tables: SummaryTables): string {
  if (tables.accuracy.length === 0) {
    return `<p class="empty">No accuracy rows yet (runs need a labeled dataset).</p>`;
  }
  const rows = tables.accuracy
    .map(
      (row) =>
        `<tr><td>${escapeHtml(row.model)}</td><td>${escapeHtml(row.variant)}</td>` +
        `<td class="num">${escapeHtml(row.top1)}</td><td class="num">${escapeHtml(row.top5)}</td></tr>`
    )
    .join("");
  return (
    `<table class="accuracy"><thead><tr><th>Model</th><th>Variant</th>` +
    `<th>Top1</th><th>Top5</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderLatencyTable(tables: SummaryTables): string {
  if (tables.latency.length === 0) {
    return `<p class="empty">No latency rows yet.</p>`;
  }
  const rows = tables.latency
    .map(
      (row) =>
        `<tr><td>${escapeHtml(row.model)}</td><td>${escapeHtml(row.variant)}</td>` +
        `<td class="num">${escapeHtml(row.latency_ms)}</td></tr>`
    )
    .join("");
  return (
    `<table class="latency"><thead><tr><th>Model</th><th>Variant</th><th>Latency (ms)</th></tr>` +
    `</thead><tbody>${rows}</tbody></table>`
  );
}

export function renderLayerTable(spans: TraceSpan[]): string {
  const rows = layerRows(spans);
  if (rows.length === 0) {
    return `<p class="empty">No layer-level spans (raise the trace level to "layer" or finer).</p>`;
  }
  const body = rows
    .map((row) => {
      const fused =
        row.fusedOf.length > 0
          ? ` <span class="fused" title="fused kernel">[fused: ${escapeHtml(row.fusedOf.join("+"))}]</span>`
          : "";
      const libraries = row.libraryCalls
        .map((call) => `${escapeHtml(call.name)} (${nsToMs(call.durationNs)} ms)`)
        .join(", ");
      return (
        `<tr><td>${escapeHtml(row.name)}${fused}</td>` +
        `<td class="num">${nsToMs(row.durationNs)}</td><td>${libraries}</td></tr>`
      );
    })
    .join("");
  return (
    `<table class="layers"><thead><tr><th>Layer</th><th>Duration (ms)</th>` +
    `<th>Library calls</th></tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderLayerComparison(
  spansA: TraceSpan[],
  spansB: TraceSpan[],
  labelA: string,
  labelB: string
): string {
  const rows = compareLayers(layerRows(spansA), layerRows(spansB));
  if (rows.length === 0) {
    return `<p class="empty">No layers to compare.</p>`;
  }
  const body = rows
    .map((row) => {
      const fused = row.fused ? ` <span class="fused">[fused]</span>` : "";
      const unmatched = row.matched ? "" : ` <span class="unmatched">[only one side]</span>`;
      const a = row.aNs === null ? "" : nsToMs(row.aNs);
      const b = row.bNs === null ? "" : nsToMs(row.bNs);
      const delta = row.deltaNs === null ? "" : nsToMs(row.deltaNs);
      return (
        `<tr><td>${escapeHtml(row.layer)}${fused}${unmatched}</td>` +
        `<td class="num">${a}</td><td class="num">${b}</td><td class="num">${delta}</td></tr>`
      );
    })
    .join("");
  return (
    `<table class="layer-compare"><thead><tr><th>Layer</th>` +
    `<th>${escapeHtml(labelA)} (ms)</th><th>${escapeHtml(labelB)} (ms)</th>` +
    `<th>Delta (ms)</th></tr></thead><tbody>${body}</tbody></table>`
  );
}

function renderAgentResult(result: AgentResult): string {
  if (result.state === "failed") {
    return (
      `<div class="agent-result failed"><h3>${escapeHtml(result.agent_id)}</h3>` +
      `<p class="banner error">failed: ${escapeHtml(result.error ?? "unknown error")}</p></div>`
    );
  }
  const framework =
    result.framework_name && result.framework_version
      ? `<p class="meta">${escapeHtml(result.framework_name)} ${escapeHtml(result.framework_version)}` +
        (result.device ? ` on ${escapeHtml(result.device)}` : "") +
        `</p>`
      : "";
  const predictions = result.outputs ? renderPredictions(result.outputs) : "";
  const layers = result.trace ? renderLayerTable(result.trace) : "";
  return (
    `<div class="agent-result"><h3>${escapeHtml(result.agent_id)}</h3>` +
    framework + predictions + layers + `</div>`
  );
}

export function renderEvaluation(result: EvaluationResult): string {
  if (result.state === "pending" || result.state === "running") {
    const partial = result.results.map(renderAgentResult).join("");
    return (
      `<div class="evaluation running"><p class="progress">` +
      `Evaluation ${escapeHtml(result.evaluation_id)} is ${escapeHtml(result.state)}…</p>` +
      partial + `</div>`
    );
  }
  if (result.state === "failed") {
    return (
      `<div class="evaluation failed"><p class="banner error">` +
      `Evaluation failed: ${escapeHtml(result.reason ?? "unknown reason")}</p></div>`
    );
  }
  const cached = result.cached ? `<p class="banner cached">served from cache</p>` : "";
  const panels = result.results.map(renderAgentResult).join("");
  return `<div class="evaluation done">${cached}${panels}</div>`;
}

/** Two runs shown side by side (e.g. baseline vs a pitfall toggle). */
export function renderSideBySide(
  baseline: EvaluationResult,
  variant: EvaluationResult
): string {
  const labelA = overridesLabel(baseline.request.pipeline_overrides);
  const labelB = overridesLabel(variant.request.pipeline_overrides);
  let comparison = "";
  const spansA = baseline.results[0]?.trace;
  const spansB = variant.results[0]?.trace;
  if (spansA && spansB && baseline.state === "done" && variant.state === "done") {
    comparison =
      `<div class="panel-comparison"><h3>Per-layer comparison</h3>` +
      renderLayerComparison(spansA, spansB, labelA, labelB) + `</div>`;
  }
  return (
    `<div class="side-by-side">` +
    `<div class="panel"><h2>${escapeHtml(labelA)}</h2>${renderEvaluation(baseline)}</div>` +
    `<div class="panel"><h2>${escapeHtml(labelB)}</h2>${renderEvaluation(variant)}</div>` +
    `</div>` + comparison
  );
}
