/** Typed client for the monitor API.
 *
 * Rank fetches are raced by design (the user can flip strategies faster
 * than the network answers), so each call aborts its predecessor and
 * carries a sequence number; consumers apply a response only when it is
 * newer than the last one applied.
 */
import type {
  DatesResponse,
  LabelAck,
  ModelInfo,
  RankResponse,
  Strategy,
  StoryDetail,
  Verdict,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    readonly code: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

export interface RankQuery {
  date: string;
  strategy: Strategy;
  k?: number;
  page?: number;
}

export interface SequencedRank {
  seq: number;
  response: RankResponse;
}

type FetchLike = typeof fetch;

export class MonitorClient {
  private rankSeq = 0;
  private rankAbort: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(init?.body ? { "Content-Type": "application/json" } : {}),
        ...init?.headers,
      },
    });
    const body = await response.json();
    if (!response.ok) {
      const message =
        typeof body?.message === "string" ? body.message : response.statusText;
      throw new ApiRequestError(body?.code ?? response.status, message);
    }
    return body as T;
  }

  dates(): Promise<DatesResponse> {
    return this.request<DatesResponse>("/api/dates");
  }

  modelInfo(): Promise<ModelInfo> {
    return this.request<ModelInfo>("/api/model");
  }

  story(storyId: string): Promise<StoryDetail> {
    return this.request<StoryDetail>(`/api/stories/${storyId}`);
  }

  submitLabel(storyId: string, verdict: Verdict): Promise<LabelAck> {
    return this.request<LabelAck>("/api/labels", {
      method: "POST",
      body: JSON.stringify({ story_id: storyId, verdict }),
    });
  }

  /** Fetch a ranking page, aborting any rank request still in flight. */
  async rank(query: RankQuery): Promise<SequencedRank> {
    const seq = ++this.rankSeq;
    this.rankAbort?.abort();
    const abort = new AbortController();
    this.rankAbort = abort;
    const params = new URLSearchParams({
      date: query.date,
      strategy: query.strategy,
      k: String(query.k ?? 50),
      page: String(query.page ?? 1),
    });
    const response = await this.request<RankResponse>(
      `/api/rank?${params.toString()}`,
      { signal: abort.signal },
    );
    return { seq, response };
  }

  imageUrl(storyId: string): string {
    return `${this.baseUrl}/api/images/${storyId}`;
  }
}
