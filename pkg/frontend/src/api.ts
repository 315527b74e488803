/**
 * Thin typed client for the registry/orchestrator endpoints. The fetch
 * function is injectable so tests can run against fixture responses.
 */

import type {
  AgentRecord,
  EvaluationRequest,
  EvaluationResult,
  ModelEntry,
  SummaryTables,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly registryBase: string,
    private readonly orchestratorBase: string,
    private readonly fetchFn: FetchLike = fetch.bind(globalThis)
  ) {}

  private async getJson<T>(url: string): Promise<T> {
    const response = await this.fetchFn(url);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, String(body?.error ?? response.status));
    }
    return body as T;
  }

  agents(): Promise<AgentRecord[]> {
    return this.getJson(`${this.registryBase}/agents`);
  }

  models(): Promise<ModelEntry[]> {
    return this.getJson(`${this.orchestratorBase}/models`);
  }

  summary(): Promise<SummaryTables> {
    return this.getJson(`${this.orchestratorBase}/summary`);
  }

  evaluations(model?: string): Promise<EvaluationResult[]> {
    const suffix = model ? `?model=${encodeURIComponent(model)}` : "";
    return this.getJson(`${this.orchestratorBase}/evaluations${suffix}`);
  }

  result(evaluationId: string): Promise<EvaluationResult> {
    return this.getJson(`${this.orchestratorBase}/evaluations/${evaluationId}`);
  }

  async submit(request: EvaluationRequest): Promise<string> {
    const response = await this.fetchFn(`${this.orchestratorBase}/evaluations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, String(body?.error ?? response.status));
    }
    return body.evaluation_id as string;
  }
}
