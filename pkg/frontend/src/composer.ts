/**
 * Evaluation composer: form state -> request JSON.
 *
 * Pitfall toggles map to pipeline parameter overrides (never new steps,
 * never reordering — the runtime rejects overrides that target a step
 * the manifest does not contain). When any toggle is active the
 * composer produces a baseline request plus a variant request so the
 * results page can show them side by side.
 */

import { validateConstraintText } from "./constraints.js";
import type { EvaluationRequest } from "./types.js";

export interface PitfallToggles {
  bgrColorLayout: boolean;
  skipCrop: boolean;
  fastDct: boolean;
}

export interface ComposerState {
  modelName: string;
  modelConstraint: string;
  frameworkName: string;
  frameworkConstraint: string;
  arch: string;
  device: string;
  interconnect: string;
  dispatchMode: "one" | "all";
  traceLevel: string;
  toggles: PitfallToggles;
  inputs: { name: string; data_b64: string }[];
}

export function emptyComposerState(): ComposerState {
  return {
    modelName: "",
    modelConstraint: "x",
    frameworkName: "",
    frameworkConstraint: "",
    arch: "",
    device: "",
    interconnect: "",
    dispatchMode: "one",
    traceLevel: "none",
    toggles: { bgrColorLayout: false, skipCrop: false, fastDct: false },
    inputs: [],
  };
}

export interface FieldError {
  field: string;
  message: string;
}

/** Client-side validation mirroring the server's request checks. */
export function validateComposerState(state: ComposerState): FieldError[] {
  const errors: FieldError[] = [];
  if (!state.modelName) {
    errors.push({ field: "model_name", message: "pick a model" });
  }
  const modelError = validateConstraintText(state.modelConstraint);
  if (modelError !== null) {
    errors.push({ field: "model_constraint", message: modelError });
  }
  if (state.frameworkConstraint) {
    const frameworkError = validateConstraintText(state.frameworkConstraint);
    if (frameworkError !== null) {
      errors.push({ field: "framework_constraint", message: frameworkError });
    }
  }
  if (state.inputs.length === 0) {
    errors.push({ field: "inputs", message: "add at least one input image" });
  }
  return errors;
}

export function togglesToOverrides(
  toggles: PitfallToggles
): Record<string, Record<string, unknown>> {
  const overrides: Record<string, Record<string, unknown>> = {};
  if (toggles.bgrColorLayout) {
    overrides["decode"] = { ...(overrides["decode"] ?? {}), color_layout: "BGR" };
  }
  if (toggles.fastDct) {
    overrides["decode"] = { ...(overrides["decode"] ?? {}), dct_method: "integer_fast" };
  }
  if (toggles.skipCrop) {
    overrides["crop"] = { percentage: 100.0 };
  }
  return overrides;
}

function baseRequest(state: ComposerState): EvaluationRequest {
  const request: EvaluationRequest = {
    model_name: state.modelName,
    model_constraint: state.modelConstraint || "x",
    inputs: state.inputs,
    dispatch_mode: state.dispatchMode,
    trace_level: state.traceLevel,
    pipeline_overrides: {},
  };
  if (state.frameworkName) request.framework_name = state.frameworkName;
  if (state.frameworkConstraint) request.framework_constraint = state.frameworkConstraint;
  if (state.arch) request.arch = state.arch;
  if (state.device) request.device = state.device;
  if (state.interconnect) request.interconnect = state.interconnect;
  return request;
}

export interface RequestPair {
  baseline: EvaluationRequest;
  variant: EvaluationRequest | null;
}

/** One request normally; baseline + toggled variant when toggles are active. */
export function buildRequestPair(state: ComposerState): RequestPair {
  const errors = validateComposerState(state);
  if (errors.length > 0) {
    throw new Error(errors.map((e) => `${e.field}: ${e.message}`).join("; "));
  }
  const baseline = baseRequest(state);
  const overrides = togglesToOverrides(state.toggles);
  if (Object.keys(overrides).length === 0) {
    return { baseline, variant: null };
  }
  const variant = { ...baseRequest(state), pipeline_overrides: overrides };
  return { baseline, variant };
}
