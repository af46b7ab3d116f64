// Typed client for the litreview HTTP JSON API. The UI talks to the server
// exclusively through this module.

export interface RankEvidence {
  score: number;
  arguments_for: string[];
  arguments_against: string[];
  excerpts: string[];
  verified: boolean;
  attempts: number;
  flags: string[];
}

export interface CandidateView {
  paper_id: string;
  title: string;
  abstract: string;
  publication_date: string;
  external_ids: Record<string, string>;
  citation_count: number | null;
  evidence: RankEvidence;
}

export interface RetrievePayload {
  version: string;
  run_id: string;
  query_id: string;
  strategy: string;
  sort: string;
  sort_degraded: boolean;
  candidates: CandidateView[];
  report: Record<string, unknown> | null;
}

export interface ReviewPayload {
  text: string;
  sentences: string[];
  cited_keys: number[];
  plan_echo: unknown;
  hallucinated_keys: number[];
  flags: string[];
  completions: number;
}

export interface AdherencePayload {
  planned_lines: number;
  generated_lines: number;
  diff: number;
  exact: boolean;
}

export interface GeneratePayload {
  version: string;
  run_id: string;
  review: ReviewPayload;
  plan: unknown;
  plan_string: string | null;
  metrics: {
    coverage: boolean;
    found_keys: number[];
    hallucinated_keys: number[];
    adherence?: AdherencePayload;
  } | null;
}

export interface DerivePlanPayload {
  version: string;
  plan: { num_sentences: number; num_words: number; assignments: Record<string, number[]> };
  plan_string: string;
  flags: string[];
}

export interface RetrieveOptions {
  rerank_strategy?: string;
  pool_target?: number;
  query_count?: number;
  sort?: string;
}

export class ApiError extends Error {
  constructor(public code: number, public stage: string, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(private baseUrl: string = "", private fetchFn: FetchLike = fetch) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.unwrap<T>(response);
  }

  private async unwrap<T>(response: Response): Promise<T> {
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(payload.code ?? response.status, payload.stage ?? "unknown",
                         payload.message ?? "request failed");
    }
    return payload as T;
  }

  async health(): Promise<{ status: string; version: string }> {
    return this.unwrap(await this.fetchFn(this.baseUrl + "/health"));
  }

  async retrieve(abstract: string, publicationDate?: string,
                 options?: RetrieveOptions): Promise<RetrievePayload> {
    return this.post("/retrieve", {
      abstract,
      publication_date: publicationDate ?? null,
      options: options ?? {},
    });
  }

  async generate(body: {
    abstract: string;
    paper_ids: string[];
    strategy: string;
    plan?: string;
    run_id: string;
    idempotency_key?: string;
  }): Promise<GeneratePayload> {
    return this.post("/generate", body);
  }

  async derivePlan(gtText: string, numKeys: number): Promise<DerivePlanPayload> {
    return this.post("/plan/derive", { gt_text: gtText, num_keys: numKeys });
  }

  async getRun(runId: string): Promise<Record<string, unknown>> {
    return this.unwrap(await this.fetchFn(`${this.baseUrl}/runs/${runId}`));
  }
}
