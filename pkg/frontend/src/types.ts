export type StratagemKind = "keyword" | "author" | "category" | "journal";

/** The six implicit relevance signals the service accepts. */
export const SIGNAL_KINDS = [
  "add_to_favourites",
  "goto_google_scholar",
  "goto_google_books",
  "goto_fulltext",
  "goto_local_availability",
  "export_record",
] as const;

export type SignalKind = (typeof SIGNAL_KINDS)[number];

export interface ResultItem {
  id: string;
  title: string;
  authors: string[];
  year: number | null;
  journal: string | null;
  snippet: string;
}

export interface BrowseResponse {
  results: ResultItem[];
  total: number;
  page: number;
}

export interface StratagemLink {
  kind: StratagemKind;
  value: string;
}

export interface DocRecord {
  id: string;
  title: string;
  abstracts: Record<string, string>;
  authors: string[];
  keywords: string[];
  keywords_free: string[];
  categories: string[];
  journal: string | null;
  year: number | null;
  language: string | null;
}

export interface DocDetail {
  doc: DocRecord;
  stratagems: StratagemLink[];
  fulltext_url: string | null;
}

export interface BrowseFilters {
  yearFrom?: number;
  yearTo?: number;
  language?: string;
}
