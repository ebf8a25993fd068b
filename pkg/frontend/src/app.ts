import { ApiClient } from "./api.js";
import { getOrCreateSessionId } from "./session.js";
import { renderDocument, renderResults } from "./views.js";
import type { BrowseFilters, StratagemLink } from "./types.js";

const PAGE_SIZE = 20;

type ResultSource =
  | { mode: "search"; q: string }
  | { mode: "browse"; link: StratagemLink; seedDocId: string };

/**
 * Wires the views to the API: search or stratagem browse fills the result
 * list, clicking a result logs its absolute rank and opens the detail view,
 * and every detail-page action posts exactly one event.
 */
export class AppController {
  private source: ResultSource | null = null;
  private pageIndex = 0;
  private filters: BrowseFilters = {};
  private lastTotal = 0;

  constructor(
    private readonly client: ApiClient,
    private readonly view: HTMLElement,
  ) {}

  async runSearch(q: string): Promise<void> {
    this.source = { mode: "search", q };
    this.pageIndex = 0;
    this.filters = {};
    await this.refresh();
  }

  async runBrowse(link: StratagemLink, seedDocId: string): Promise<void> {
    this.source = { mode: "browse", link, seedDocId };
    this.pageIndex = 0;
    this.filters = {};
    await this.refresh();
  }

  async openDoc(docId: string): Promise<void> {
    const detail = await this.client.doc(docId);
    renderDocument(this.view, detail, {
      onStratagem: (link) => {
        void this.runBrowse(link, detail.doc.id);
      },
      onSignal: (kind) => {
        void this.client.signal(kind, detail.doc.id);
      },
    });
  }

  private async refresh(): Promise<void> {
    if (this.source === null) return;
    const response =
      this.source.mode === "search"
        ? await this.client.search(this.source.q, this.pageIndex, PAGE_SIZE)
        : await this.client.browse(
            this.source.link,
            this.source.seedDocId,
            this.pageIndex,
            this.filters,
            PAGE_SIZE,
          );
    this.lastTotal = response.total;
    renderResults(this.view, response, this.pageIndex, PAGE_SIZE, {
      onResultClick: (docId, rank) => {
        void this.client.clickResult(docId, rank, this.lastTotal);
        void this.openDoc(docId);
      },
      onPageChange: (pageIndex) => {
        this.pageIndex = pageIndex;
        void this.refresh();
      },
      onFilterChange: (filters) => {
        this.filters = filters;
        this.pageIndex = 0;
        void this.refresh();
      },
    }, this.filters);
  }
}

function bootstrap(): void {
  const view = document.getElementById("view");
  const form = document.getElementById("search-form") as HTMLFormElement | null;
  const input = document.getElementById("q") as HTMLInputElement | null;
  if (!view || !form || !input) return;
  const client = new ApiClient(window.location.origin, getOrCreateSessionId(window.localStorage));
  const controller = new AppController(client, view);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (input.value.trim()) {
      void controller.runSearch(input.value.trim());
    }
  });
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  bootstrap();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", bootstrap);
}
