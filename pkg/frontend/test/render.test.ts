import assert from 'node:assert/strict';
import { test } from 'node:test';

import type { ApiClient } from '../src/api.js';
import { escapeHtml, renderCard, renderError, renderResults, renderTranscript } from '../src/render.js';
import { ChatSession } from '../src/session.js';
import type { Reaction } from '../src/types.js';
import { FakeClient, cannedItem, cannedResponse } from './helpers.js';

const noMarks = new Map<string, Reaction>();

test('escapeHtml neutralizes markup', () => {
  assert.equal(escapeHtml('<b>&"x"</b>'), '&lt;b&gt;&amp;&quot;x&quot;&lt;/b&gt;');
});

test('card shows title, year, score bar width, and provenance badge', () => {
  const html = renderCard(cannedItem({ score: 0.72, provenance: 'cf_neighbor' }), noMarks);
  assert.match(html, /Galaxy Rising \(1980\)/);
  assert.match(html, /width:72%/);
  assert.match(html, /badge cf_neighbor/);
  assert.match(html, /0\.7200/); // score rendered verbatim to 4 places
});

test('negative scores clamp the bar to zero width but render verbatim', () => {
  const html = renderCard(cannedItem({ score: -0.25 }), noMarks);
  assert.match(html, /width:0%/);
  assert.match(html, /-0\.2500/);
});

test('marked card offers undo instead of react buttons', () => {
  const marks = new Map<string, Reaction>([['m0001', 'liked']]);
  const html = renderCard(cannedItem(), marks);
  assert.match(html, /undo liked/);
  assert.doesNotMatch(html, /class="like"/);
});

test('fallback banner appears only when fallback was used', () => {
  const plain = renderResults(cannedResponse(), noMarks);
  assert.doesNotMatch(plain, /fallback-banner/);
  const fallback = renderResults(cannedResponse({ fallback_used: true }), noMarks);
  assert.match(fallback, /fallback-banner/);
});

test('diagnostics line mirrors the service payload', () => {
  const html = renderResults(cannedResponse(), noMarks);
  assert.match(html, /parsed 4 \/ matched 3 \/ ambiguous 0/);
});

test('transcript renders user text escaped and reactions styled', async () => {
  const fake = new FakeClient();
  const session = new ChatSession('s1');
  await session.sendTurn(fake as unknown as ApiClient, 'I <3 heist films');
  session.markItem('m0001', 'liked');
  const html = renderTranscript(session);
  assert.match(html, /I &lt;3 heist films/);
  assert.match(html, /seeker reaction/);
  assert.match(html, /You might like: Galaxy Rising, Shadow Vendetta, Harbor Reverie\./);
});

test('error banner renders only when an error is present', () => {
  assert.equal(renderError(null), '');
  assert.match(renderError('boom'), /error-banner/);
});
