import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import type { FetchLike } from "../src/api.js";

interface Captured {
  url: string;
  method: string;
  body: Record<string, unknown> | null;
}

function stubService(responses: Record<string, unknown> = {}) {
  const captured: Captured[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    captured.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? (JSON.parse(init.body as string) as Record<string, unknown>) : null,
    });
    const path = url.replace("http://test", "").split("?")[0] ?? "";
    return {
      ok: true,
      status: 200,
      json: async () => responses[path] ?? { results: [], total: 0, page: 1 },
    };
  };
  return { captured, fetchFn };
}

function client(stub: ReturnType<typeof stubService>): ApiClient {
  return new ApiClient("http://test", "a".repeat(32), stub.fetchFn);
}

describe("ApiClient", () => {
  it("search sends the query, session, and 1-based page", async () => {
    const stub = stubService();
    await client(stub).search("violence sports", 1);
    const url = new URL(stub.captured[0]!.url);
    expect(url.pathname).toBe("/search");
    expect(url.searchParams.get("q")).toBe("violence sports");
    expect(url.searchParams.get("session")).toBe("a".repeat(32));
    expect(url.searchParams.get("page")).toBe("2");
  });

  it("doc fetch carries the session", async () => {
    const stub = stubService({ "/doc/D1": { doc: {}, stratagems: [], fulltext_url: null } });
    await client(stub).doc("D1");
    const url = new URL(stub.captured[0]!.url);
    expect(url.pathname).toBe("/doc/D1");
    expect(url.searchParams.get("session")).toBe("a".repeat(32));
  });

  it("browse posts kind, value, seed id, session id, and filters", async () => {
    const stub = stubService();
    await client(stub).browse(
      { kind: "keyword", value: "sport" },
      "D005",
      0,
      { yearFrom: 2000, yearTo: 2010, language: "en" },
    );
    const request = stub.captured[0]!;
    expect(request.method).toBe("POST");
    expect(request.url).toBe("http://test/browse");
    expect(request.body).toEqual({
      session_id: "a".repeat(32),
      kind: "keyword",
      value: "sport",
      seed_doc_id: "D005",
      page: 1,
      page_size: 20,
      year_from: 2000,
      year_to: 2010,
      language: "en",
    });
  });

  it("clickResult posts an absolute rank with the result size", async () => {
    const stub = stubService();
    const api = client(stub);
    await api.clickResult("D9", 43, 180);
    const request = stub.captured[0]!;
    expect(request.url).toBe("http://test/event");
    expect(request.body?.event_type).toBe("click_result");
    expect(request.body?.payload).toEqual({ doc_id: "D9", rank: 43, result_size: 180 });
    expect(typeof request.body?.timestamp).toBe("number");
  });

  it("signal posts the exact signal kind", async () => {
    const stub = stubService();
    await client(stub).signal("add_to_favourites", "D9");
    expect(stub.captured[0]!.body?.payload).toEqual({
      kind: "add_to_favourites",
      doc_id: "D9",
    });
  });

  it("non-2xx responses raise ApiError", async () => {
    const fetchFn: FetchLike = async () => ({ ok: false, status: 404, json: async () => ({}) });
    const api = new ApiClient("http://test", "s", fetchFn);
    await expect(api.doc("missing")).rejects.toBeInstanceOf(ApiError);
  });
});
