/**
 * Wire types for the orchestrator/registry HTTP APIs.
 *
 * These mirror the JSON the services actually emit; the fixture files
 * under fixtures/ are captured from live responses and the snapshot
 * tests keep renderers honest against them.
 */

export interface NameVersion {
  name: string;
  version: string;
}

export interface Hardware {
  architecture: string;
  device_classes: string[];
  interconnect?: string;
  attributes: Record<string, string>;
}

export interface AgentRecord {
  agent_id: string;
  address: string;
  hardware: Hardware;
  frameworks: NameVersion[];
  models: NameVersion[];
  last_heartbeat_unix: number;
}

export interface ModelEntry {
  name: string;
  version: string;
  task: string;
  framework_name: string;
  framework_constraint: string;
}

export interface Prediction {
  rank: number;
  label_index: number;
  label: string;
  probability: number;
}

export interface OutputBlock {
  input: string;
  predictions: Prediction[];
}

export interface TraceSpan {
  span_id: string;
  parent_id: string | null;
  level: string;
  name: string;
  start_ns: number;
  end_ns: number;
  tags: Record<string, unknown>;
}

export interface AccuracyMetrics {
  n_samples: number;
  top1: number;
  top5: number;
}

export interface AgentResult {
  agent_id: string;
  agent_address?: string;
  state: string;
  error?: string;
  framework_name?: string;
  framework_version?: string;
  model_name?: string;
  model_version?: string;
  device?: string;
  container_ref?: string | null;
  environment?: Record<string, string>;
  outputs?: OutputBlock[];
  trace?: TraceSpan[];
  metrics?: AccuracyMetrics | null;
}

export interface RequestEcho {
  model_name: string;
  model_constraint: string;
  framework_name?: string | null;
  framework_constraint?: string | null;
  arch?: string | null;
  device?: string | null;
  interconnect?: string | null;
  dataset?: string | null;
  inputs: { name?: string; data_b64?: string; url?: string }[];
  dispatch_mode: string;
  trace_level: string;
  pipeline_overrides: Record<string, Record<string, unknown>>;
}

export interface EvaluationResult {
  evaluation_id: string;
  state: string;
  reason?: string | null;
  cached?: boolean;
  metrics?: AccuracyMetrics | null;
  model_name?: string;
  model_version?: string;
  framework_name?: string;
  framework_version?: string;
  request: RequestEcho;
  results: AgentResult[];
}

export interface SummaryTables {
  accuracy: { model: string; variant: string; top1: string; top5: string }[];
  latency: { model: string; variant: string; latency_ms: string }[];
}

export interface EvaluationRequest {
  model_name: string;
  model_constraint: string;
  framework_name?: string;
  framework_constraint?: string;
  arch?: string;
  device?: string;
  interconnect?: string;
  dataset?: string;
  inputs: { name: string; data_b64: string }[];
  dispatch_mode: "one" | "all";
  trace_level: string;
  pipeline_overrides: Record<string, Record<string, unknown>>;
}
