/** Fetch-based API client with bounded retry on transient failures.
 *
 * Retries only network errors and 5xx/429; other 4xx surface immediately.
 * The in-flight guard lives in the session layer, not here.
 */

import type { RecommendRequest, RecommendResponse, SearchItem } from './types.js';

export interface ClientOptions {
  retries?: number;
  backoffMs?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: string,
  ) {
    super(`API error ${status}: ${body.slice(0, 200)}`);
  }
}

const RETRY_STATUSES = new Set([429, 500, 502, 503, 504]);

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function requestWithRetry(
  url: string,
  init: RequestInit,
  retries: number,
  backoffMs: number,
): Promise<Response> {
  let lastError: unknown;
  for (let attempt = 0; attempt <= retries; attempt++) {
    if (attempt > 0) await delay(backoffMs * 2 ** (attempt - 1));
    try {
      const res = await fetch(url, init);
      if (RETRY_STATUSES.has(res.status) && attempt < retries) continue;
      return res;
    } catch (err) {
      lastError = err;
      if (attempt >= retries) throw err;
    }
  }
  throw lastError;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private options: ClientOptions = {},
  ) {}

  async recommend(request: RecommendRequest): Promise<RecommendResponse> {
    const res = await requestWithRetry(
      `${this.baseUrl}/v1/recommend`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(request),
      },
      this.options.retries ?? 2,
      this.options.backoffMs ?? 300,
    );
    const body = await res.text();
    if (!res.ok) throw new ApiError(res.status, body);
    return JSON.parse(body) as RecommendResponse;
  }

  async searchItems(query: string, limit = 8): Promise<SearchItem[]> {
    const params = new URLSearchParams({ q: query, limit: String(limit) });
    const res = await requestWithRetry(
      `${this.baseUrl}/v1/items/search?${params}`,
      { method: 'GET' },
      this.options.retries ?? 2,
      this.options.backoffMs ?? 300,
    );
    const body = await res.text();
    if (!res.ok) throw new ApiError(res.status, body);
    return (JSON.parse(body) as { items: SearchItem[] }).items;
  }
}
