import { EventQueue } from "./session.js";
import { servicePage } from "./rank.js";
import type {
  BrowseFilters,
  BrowseResponse,
  DocDetail,
  SignalKind,
  StratagemLink,
} from "./types.js";

export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<ResponseLike>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Typed client for the browselab HTTP API; fetch is injectable for tests. */
export class ApiClient {
  readonly events: EventQueue;

  constructor(
    private readonly baseUrl: string,
    readonly sessionId: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    queueOptions: { retries?: number; now?: () => number } = {},
  ) {
    this.events = new EventQueue(
      (body) =>
        this.request("/event", {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(body),
        }).then(() => undefined),
      queueOptions,
    );
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, `${init?.method ?? "GET"} ${path} -> ${response.status}`);
    }
    return response.json();
  }

  async search(q: string, pageIndex = 0, pageSize = 20): Promise<BrowseResponse> {
    const params = new URLSearchParams({
      q,
      session: this.sessionId,
      page: String(servicePage(pageIndex)),
      page_size: String(pageSize),
    });
    return (await this.request(`/search?${params}`)) as BrowseResponse;
  }

  async doc(id: string): Promise<DocDetail> {
    const params = new URLSearchParams({ session: this.sessionId });
    return (await this.request(`/doc/${encodeURIComponent(id)}?${params}`)) as DocDetail;
  }

  async browse(
    link: StratagemLink,
    seedDocId: string,
    pageIndex = 0,
    filters: BrowseFilters = {},
    pageSize = 20,
  ): Promise<BrowseResponse> {
    const body: Record<string, unknown> = {
      session_id: this.sessionId,
      kind: link.kind,
      value: link.value,
      seed_doc_id: seedDocId,
      page: servicePage(pageIndex),
      page_size: pageSize,
    };
    if (filters.yearFrom !== undefined) body.year_from = filters.yearFrom;
    if (filters.yearTo !== undefined) body.year_to = filters.yearTo;
    if (filters.language !== undefined) body.language = filters.language;
    return (await this.request("/browse", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    })) as BrowseResponse;
  }

  /** Log a result click at its absolute rank; fire-and-forget. */
  clickResult(docId: string, rank: number, resultSize: number): Promise<void> {
    return this.events.enqueue(this.sessionId, "click_result", {
      doc_id: docId,
      rank,
      result_size: resultSize,
    });
  }

  /** Emit one of the six implicit relevance signals; fire-and-forget. */
  signal(kind: SignalKind, docId: string): Promise<void> {
    return this.events.enqueue(this.sessionId, "signal", { kind, doc_id: docId });
  }
}
