/** Test doubles: a canned in-memory client and a real HTTP stub service. */

import { createServer, type Server } from 'node:http';
import type { AddressInfo } from 'node:net';
import type { RecommendRequest, RecommendResponse, RecommendedItem } from '../src/types.js';

export function cannedItem(overrides: Partial<RecommendedItem> = {}): RecommendedItem {
  return {
    item_id: 'm0001',
    title: 'Galaxy Rising',
    year: 1980,
    score: 1.0,
    provenance: 'llm_matched',
    ...overrides,
  };
}

export function cannedResponse(
  overrides: Partial<RecommendResponse> = {},
): RecommendResponse {
  return {
    items: [
      cannedItem(),
      cannedItem({ item_id: 'm0002', title: 'Shadow Vendetta', year: 1993, score: 0.72, provenance: 'cf_neighbor' }),
      cannedItem({ item_id: 'm0003', title: 'Harbor Reverie', year: 2001, score: 0.55, provenance: 'cf_neighbor' }),
    ],
    fallback_used: false,
    diagnostics: { n_parsed: 4, n_matched: 3, n_ambiguous: 0 },
    ...overrides,
  };
}

/** Minimal fake implementing the ApiClient surface the session consumes. */
export class FakeClient {
  requests: RecommendRequest[] = [];
  response: RecommendResponse = cannedResponse();
  failWith: Error | null = null;
  delayMs = 0;

  async recommend(request: RecommendRequest): Promise<RecommendResponse> {
    this.requests.push(structuredClone(request));
    if (this.delayMs) await new Promise((r) => setTimeout(r, this.delayMs));
    if (this.failWith) throw this.failWith;
    return structuredClone(this.response);
  }
}

export interface StubService {
  url: string;
  requests: RecommendRequest[];
  close(): Promise<void>;
  /** Queue of status codes to serve before succeeding (for retry tests). */
  failures: number[];
}

/** Real HTTP stub serving /v1/recommend with a canned payload. */
export function startStubService(
  response: RecommendResponse = cannedResponse(),
): Promise<StubService> {
  const requests: RecommendRequest[] = [];
  const failures: number[] = [];
  const server: Server = createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on('data', (chunk) => chunks.push(chunk));
    req.on('end', () => {
      const failure = failures.shift();
      if (failure) {
        res.writeHead(failure, { 'content-type': 'application/json' });
        res.end('{"error":"stub failure"}');
        return;
      }
      if (req.method === 'POST' && req.url === '/v1/recommend') {
        requests.push(JSON.parse(Buffer.concat(chunks).toString()) as RecommendRequest);
        res.writeHead(200, { 'content-type': 'application/json' });
        res.end(JSON.stringify(response));
        return;
      }
      if (req.method === 'GET' && req.url?.startsWith('/v1/items/search')) {
        res.writeHead(200, { 'content-type': 'application/json' });
        res.end(JSON.stringify({ items: [{ item_id: 'm0001', title: 'Galaxy Rising', year: 1980 }] }));
        return;
      }
      res.writeHead(404, { 'content-type': 'application/json' });
      res.end('{"error":"not found"}');
    });
  });
  return new Promise((resolve) => {
    server.listen(0, '127.0.0.1', () => {
      const { port } = server.address() as AddressInfo;
      resolve({
        url: `http://127.0.0.1:${port}`,
        requests,
        failures,
        close: () => new Promise((r) => server.close(() => r())),
      });
    });
  });
}
