/**
 * Typed client for the annotation service contract.
 *
 * All state lives on the service; this client only shapes requests and
 * surfaces errors verbatim so the UI can display them.
 */

export interface Progress {
  rated: number;
  total: number;
}

export interface TaskView {
  done: false;
  task_id: string;
  case_id: string;
  model_id: string;
  case_excerpt: string;
  predicted_label: number | string;
  explanation: string;
  rubric: string[];
  progress: Progress;
}

export interface DoneView {
  done: true;
  progress: Progress;
  rubric: string[];
}

export type NextResponse = TaskView | DoneView;

export interface SubmitAck {
  ok: boolean;
  task_id: string;
  progress: Progress;
}

export interface RatingBody {
  task_id: string;
  rater_id: string;
  score: number;
  comment?: string;
}

export interface ExportView {
  ratings: Array<{
    rater_id: string;
    case_id: string;
    model_id: string;
    score: number;
    timestamp: string;
  }>;
  distribution: Record<
    string,
    { mean: number; n: number; distribution: Record<string, number> }
  >;
}

/** Service-reported failure; `detail` is passed through verbatim. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

/** What the session needs from the service; fakes implement this. */
export interface AnnotateClient {
  register(raterId: string): Promise<{ ok: boolean }>;
  next(raterId: string): Promise<NextResponse>;
  submitRating(body: RatingBody): Promise<SubmitAck>;
  export(): Promise<ExportView>;
}

export class AnnotateApi implements AnnotateClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (body.detail !== undefined) {
          detail =
            typeof body.detail === "string"
              ? body.detail
              : JSON.stringify(body.detail);
        }
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  register(raterId: string): Promise<{ ok: boolean }> {
    return this.request("/api/raters", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ rater_id: raterId }),
    });
  }

  next(raterId: string): Promise<NextResponse> {
    return this.request(`/api/raters/${encodeURIComponent(raterId)}/next`);
  }

  submitRating(body: RatingBody): Promise<SubmitAck> {
    return this.request("/api/ratings", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  export(): Promise<ExportView> {
    return this.request("/api/export");
  }
}
