/** DOM wiring: connects the session state, API client, and renderers. */

import { ApiClient } from './api.js';
import { ChatSession, MAX_K, MIN_K } from './session.js';
import type { SessionExport } from './session.js';
import { renderError, renderResults, renderTranscript } from './render.js';

const API_BASE = (window as { CONVREC_API_BASE?: string }).CONVREC_API_BASE ?? '';

const client = new ApiClient(API_BASE);
let session = new ChatSession(crypto.randomUUID());
let lastDraft = '';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const transcriptEl = $('transcript');
const resultsEl = $('results');
const errorEl = $('error');
const inputEl = $<HTMLInputElement>('utterance');
const sendEl = $<HTMLButtonElement>('send');
const kEl = $<HTMLInputElement>('k');
const searchEl = $<HTMLInputElement>('search');
const searchResultsEl = $('search-results');

function redraw(): void {
  transcriptEl.innerHTML = renderTranscript(session);
  resultsEl.innerHTML = renderResults(session.lastResponse, session.pendingReactions());
  errorEl.innerHTML = renderError(session.error);
  sendEl.disabled = session.inFlight;
  inputEl.disabled = session.inFlight;
  transcriptEl.scrollTop = transcriptEl.scrollHeight;
  const retry = document.getElementById('retry');
  if (retry) retry.addEventListener('click', () => void send(lastDraft));
}

async function send(text: string): Promise<void> {
  if (session.inFlight || !text.trim()) return;
  lastDraft = text;
  inputEl.value = '';
  redraw();
  try {
    await session.sendTurn(client, text);
  } catch {
    inputEl.value = lastDraft; // roll the draft back for editing/retry
  }
  redraw();
}

sendEl.addEventListener('click', () => void send(inputEl.value));
inputEl.addEventListener('keydown', (event) => {
  if (event.key === 'Enter') void send(inputEl.value);
});

kEl.min = String(MIN_K);
kEl.max = String(MAX_K);
kEl.value = String(session.k);
kEl.addEventListener('change', () => {
  session.setK(Number(kEl.value));
  kEl.value = String(session.k);
});

resultsEl.addEventListener('click', (event) => {
  const target = event.target as HTMLElement;
  const itemId = target.dataset.item;
  if (!itemId) return;
  if (target.classList.contains('like')) session.markItem(itemId, 'liked');
  else if (target.classList.contains('seen')) session.markItem(itemId, 'seen');
  else if (target.classList.contains('undo')) session.undoReaction(itemId);
  else return;
  redraw();
});

$('export').addEventListener('click', () => {
  const blob = new Blob([JSON.stringify(session.export(), null, 2)], {
    type: 'application/json',
  });
  const link = document.createElement('a');
  link.href = URL.createObjectURL(blob);
  link.download = `chat-session-${session.sessionId.slice(0, 8)}.json`;
  link.click();
  URL.revokeObjectURL(link.href);
});

$<HTMLInputElement>('import').addEventListener('change', async (event) => {
  const file = (event.target as HTMLInputElement).files?.[0];
  if (!file) return;
  try {
    session = ChatSession.import(JSON.parse(await file.text()) as SessionExport);
    kEl.value = String(session.k);
    redraw();
  } catch (err) {
    session.error = `could not import session: ${err instanceof Error ? err.message : err}`;
    redraw();
  }
});

let searchTimer: ReturnType<typeof setTimeout> | undefined;
searchEl.addEventListener('input', () => {
  clearTimeout(searchTimer);
  const query = searchEl.value.trim();
  if (!query) {
    searchResultsEl.innerHTML = '';
    return;
  }
  searchTimer = setTimeout(async () => {
    try {
      const items = await client.searchItems(query);
      searchResultsEl.innerHTML = items
        .map(
          (item) =>
            `<li data-title="${item.title}${item.year ? ` (${item.year})` : ''}">` +
            `${item.title}${item.year ? ` (${item.year})` : ''}</li>`,
        )
        .join('');
    } catch {
      searchResultsEl.innerHTML = '<li class="muted">search unavailable</li>';
    }
  }, 150);
});

searchResultsEl.addEventListener('click', (event) => {
  const title = (event.target as HTMLElement).dataset.title;
  if (!title) return;
  inputEl.value = inputEl.value ? `${inputEl.value} ${title}` : `I enjoyed ${title}.`;
  searchResultsEl.innerHTML = '';
  searchEl.value = '';
  inputEl.focus();
});

redraw();
