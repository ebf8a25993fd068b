import { absoluteRank } from "./rank.js";
import { SIGNAL_KINDS } from "./types.js";
import type {
  BrowseFilters,
  BrowseResponse,
  DocDetail,
  SignalKind,
  StratagemLink,
} from "./types.js";

const SIGNAL_LABELS: Record<SignalKind, string> = {
  add_to_favourites: "Add to favourites",
  goto_google_scholar: "Google Scholar",
  goto_google_books: "Google Books",
  goto_fulltext: "Full text",
  goto_local_availability: "Local availability",
  export_record: "Export",
};

export interface ResultListHandlers {
  onResultClick(docId: string, rank: number): void;
  onPageChange(pageIndex: number): void;
  onFilterChange(filters: BrowseFilters): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function filtersBar(current: BrowseFilters, handlers: ResultListHandlers): HTMLElement {
  const bar = el("form", "filters");
  const yearFrom = el("input", "year-from");
  yearFrom.type = "number";
  yearFrom.placeholder = "year from";
  if (current.yearFrom !== undefined) yearFrom.value = String(current.yearFrom);
  const yearTo = el("input", "year-to");
  yearTo.type = "number";
  yearTo.placeholder = "year to";
  if (current.yearTo !== undefined) yearTo.value = String(current.yearTo);
  const language = el("input", "language");
  language.placeholder = "language";
  if (current.language !== undefined) language.value = current.language;
  const apply = el("button", "apply-filters", "Apply");
  apply.type = "submit";
  bar.append(yearFrom, yearTo, language, apply);
  bar.addEventListener("submit", (event) => {
    event.preventDefault();
    const filters: BrowseFilters = {};
    if (yearFrom.value) filters.yearFrom = Number(yearFrom.value);
    if (yearTo.value) filters.yearTo = Number(yearTo.value);
    if (language.value) filters.language = language.value;
    handlers.onFilterChange(filters);
  });
  return bar;
}

/**
 * Result list view. Ranks are implicit in the order; clicking an entry
 * reports its absolute rank (page-aware) before navigation. Nothing here
 * knows or shows which ranking produced the list.
 */
export function renderResults(
  container: HTMLElement,
  response: BrowseResponse,
  pageIndex: number,
  pageSize: number,
  handlers: ResultListHandlers,
  filters: BrowseFilters = {},
): void {
  container.replaceChildren();
  container.append(filtersBar(filters, handlers));
  if (response.results.length === 0) {
    container.append(el("p", "empty-state", "No results."));
    return;
  }
  container.append(el("p", "result-count", `${response.total} results`));
  const list = el("ol", "results");
  list.start = pageIndex * pageSize + 1;
  response.results.forEach((item, indexOnPage) => {
    const entry = el("li", "result");
    const link = el("a", "result-title", item.title || item.id);
    link.href = `#/doc/${encodeURIComponent(item.id)}`;
    link.addEventListener("click", () => {
      handlers.onResultClick(item.id, absoluteRank(pageIndex, pageSize, indexOnPage));
    });
    const meta = [item.authors.join(", "), item.journal ?? "", item.year ?? ""]
      .filter((part) => part !== "" && part !== null)
      .join(" · ");
    entry.append(link, el("div", "result-meta", meta), el("p", "result-snippet", item.snippet));
    list.append(entry);
  });
  container.append(list);

  const pager = el("div", "pager");
  if (pageIndex > 0) {
    const prev = el("button", "page-prev", "Previous");
    prev.addEventListener("click", () => handlers.onPageChange(pageIndex - 1));
    pager.append(prev);
  }
  if ((pageIndex + 1) * pageSize < response.total) {
    const next = el("button", "page-next", "Next");
    next.addEventListener("click", () => handlers.onPageChange(pageIndex + 1));
    pager.append(next);
  }
  container.append(pager);
}

export interface DocumentHandlers {
  onStratagem(link: StratagemLink): void;
  onSignal(kind: SignalKind): void;
}

/**
 * Document detail view: metadata, one browse link per stratagem value the
 * document actually carries, and the six relevance-signal buttons (the
 * full-text button only when a full text exists).
 */
export function renderDocument(
  container: HTMLElement,
  detail: DocDetail,
  handlers: DocumentHandlers,
): void {
  container.replaceChildren();
  const doc = detail.doc;
  container.append(el("h2", "doc-title", doc.title || doc.id));

  const meta = el("dl", "doc-meta");
  const rows: Array<[string, string]> = [
    ["Authors", doc.authors.join(", ")],
    ["Journal", doc.journal ?? ""],
    ["Year", doc.year === null ? "" : String(doc.year)],
    ["Language", doc.language ?? ""],
  ];
  for (const [label, value] of rows) {
    if (!value) continue;
    meta.append(el("dt", undefined, label), el("dd", undefined, value));
  }
  container.append(meta);
  for (const text of Object.values(doc.abstracts)) {
    container.append(el("p", "doc-abstract", text));
  }

  const browseBox = el("section", "stratagems");
  browseBox.append(el("h3", undefined, "Browse by"));
  for (const link of detail.stratagems) {
    const button = el("button", `stratagem-link stratagem-${link.kind}`, link.value);
    button.dataset.kind = link.kind;
    button.dataset.value = link.value;
    button.addEventListener("click", () => handlers.onStratagem(link));
    browseBox.append(button);
  }
  container.append(browseBox);

  const signalBox = el("section", "signals");
  for (const kind of SIGNAL_KINDS) {
    if (kind === "goto_fulltext" && detail.fulltext_url === null) {
      continue;
    }
    const button = el("button", `signal signal-${kind}`, SIGNAL_LABELS[kind]);
    button.dataset.signal = kind;
    button.addEventListener("click", () => handlers.onSignal(kind));
    signalBox.append(button);
  }
  container.append(signalBox);
}
