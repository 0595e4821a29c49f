/**
 * Typed client for the session-capture HTTP API.
 * The fetch function is injectable so tests can run against a stub service.
 */

export type SessionState =
  | "created"
  | "collecting"
  | "survey_done"
  | "finalized"
  | "aborted";

export type RoomMeta = {
  session_id?: string;
  width_ft: number;
  height_ft: number;
  is_rectangle: boolean;
  door_direction_deg: number;
  desk_direction_deg: number;
  noise_db: number;
  heart_rate_bpm?: number | null;
};

export type Sample = {
  timestamp_ms: number;
  temperature: number;
  humidity: number;
  air_pressure: number;
  light_intensity: number;
  toxic_chemical: number;
  tvoc: number;
  eco2: number;
  h2: number;
  ethanol: number;
};

export type Progress = {
  state: SessionState;
  sample_count: number;
  elapsed_ms: number;
  latest: ({ timestamp_ms: number } & Record<string, number>) | null;
};

export type ImageResponse = {
  word: string;
  rating: number;
};

export type SurveyRecordBody = {
  masq_answers: number[];
  image_responses: ImageResponse[];
  demographics: Record<string, string>;
  feng_shui_belief?: number | null;
};

export type MasqItem = {
  text: string;
  reverse_coded: boolean;
};

export type SurveyDefinition = {
  format: string;
  version: number;
  masq_items: MasqItem[];
  image_ids: string[];
  masq_scale: [number, number];
  image_scale: [number, number];
};

export type FinalizeSummary = {
  session_id: string;
  state: "finalized";
  sample_count: number;
  score: number;
  wh_ratio_score: number;
  refs: Record<string, string>;
  warnings: string[];
};

export type Violation = {
  code: string;
  message: string;
};

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }

  /** Structured survey violations, when the server sent any. */
  violations(): Violation[] {
    const detail = this.detail as { violations?: Violation[] } | null;
    if (detail && typeof detail === "object" && Array.isArray(detail.violations)) {
      return detail.violations;
    }
    return [];
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    const text = await res.text();
    let payload: unknown = text;
    try {
      payload = text ? JSON.parse(text) : null;
    } catch {
      // plain-text bodies (CSV export, proxy errors) pass through as-is
    }
    if (!res.ok) {
      const detail =
        payload !== null && typeof payload === "object" && "detail" in payload
          ? (payload as { detail: unknown }).detail
          : payload;
      throw new ApiError(res.status, detail);
    }
    return payload as T;
  }

  createSession(meta: RoomMeta): Promise<{ session_id: string; state: SessionState }> {
    return this.request("POST", "/sessions", meta);
  }

  pushSamples(
    sessionId: string,
    samples: Sample[],
  ): Promise<{ state: SessionState; accepted: number; sample_count: number }> {
    return this.request("POST", `/sessions/${sessionId}/samples`, { samples });
  }

  getProgress(sessionId: string): Promise<Progress> {
    return this.request("GET", `/sessions/${sessionId}/progress`);
  }

  submitSurvey(
    sessionId: string,
    record: SurveyRecordBody,
  ): Promise<{ state: SessionState; score: number }> {
    return this.request("POST", `/sessions/${sessionId}/survey`, record);
  }

  finalize(sessionId: string): Promise<FinalizeSummary> {
    return this.request("POST", `/sessions/${sessionId}/finalize`);
  }

  abort(sessionId: string): Promise<{ session_id: string; state: SessionState }> {
    return this.request("POST", `/sessions/${sessionId}/abort`);
  }

  getSurveyDefinition(): Promise<SurveyDefinition> {
    return this.request("GET", "/survey/definition");
  }

  exportCsv(): Promise<string> {
    return this.request("GET", "/dataset/export.csv");
  }
}
