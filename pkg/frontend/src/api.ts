// Thin typed client for the review service. Every method maps to one
// endpoint; errors surface as ApiError with the HTTP status and the
// service's detail message.
import type {
  DocumentDetail,
  DocumentJudgment,
  DocumentList,
  Preference,
  ReviewReport,
  RunList,
  Session,
  StoryJudgment,
} from "./types.js";

export class ApiError extends Error {
  status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return response.statusText || `HTTP ${response.status}`;
  }
}

export class ReviewClient {
  baseUrl: string;

  constructor(baseUrl = "") {
    // strip a trailing slash so paths can always start with one
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.json() as Promise<T>;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listRuns(): Promise<RunList> {
    return this.request("/runs");
  }

  listDocuments(runId: string): Promise<DocumentList> {
    return this.request(`/runs/${encodeURIComponent(runId)}/documents`);
  }

  getDocument(documentId: string, runId?: string): Promise<DocumentDetail> {
    const query = runId ? `?run=${encodeURIComponent(runId)}` : "";
    return this.request(`/documents/${encodeURIComponent(documentId)}${query}`);
  }

  createSession(runId: string, reviewerId: string): Promise<Session> {
    return this.post("/sessions", { run_id: runId, reviewer_id: reviewerId });
  }

  getSession(sessionId: string): Promise<Session> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  sendStoryJudgment(sessionId: string, judgment: StoryJudgment): Promise<Session> {
    return this.post(
      `/sessions/${encodeURIComponent(sessionId)}/judgments`,
      judgment,
    );
  }

  sendDocumentJudgment(
    sessionId: string,
    judgment: DocumentJudgment,
  ): Promise<Session> {
    return this.post(
      `/sessions/${encodeURIComponent(sessionId)}/judgments`,
      judgment,
    );
  }

  sendPreference(sessionId: string, preference: Preference): Promise<Session> {
    return this.post(
      `/sessions/${encodeURIComponent(sessionId)}/preferences`,
      preference,
    );
  }

  getReport(runId: string): Promise<ReviewReport> {
    return this.request(`/runs/${encodeURIComponent(runId)}/review-report`);
  }
}
