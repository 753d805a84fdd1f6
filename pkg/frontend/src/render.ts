/** Pure HTML-string renderers.
 *
 * Keeping these as string functions makes the rendered conversation
 * directly comparable in tests without a DOM. Scores render exactly as the
 * service sent them; only the bar width is derived.
 */

import type { RecommendResponse, RecommendedItem, Reaction } from './types.js';
import type { ChatSession, SessionTurn } from './session.js';

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
    .replaceAll("'", '&#39;');
}

const BADGE_LABELS: Record<string, string> = {
  llm_matched: 'suggested',
  cf_neighbor: 'neighbor',
  fallback: 'fallback',
};

function renderTurn(turn: SessionTurn): string {
  const role = turn.speaker === 'seeker' ? 'seeker' : 'recommender';
  const cls = turn.origin === 'reaction' ? `${role} reaction` : role;
  return `<div class="turn ${cls}"><span class="who">${role}</span>` +
    `<span class="text">${escapeHtml(turn.text)}</span></div>`;
}

export function renderTranscript(session: ChatSession): string {
  return session.turns.map(renderTurn).join('\n');
}

function scoreBarWidth(score: number): number {
  return Math.round(Math.min(1, Math.max(0, score)) * 100);
}

export function renderCard(
  item: RecommendedItem,
  pending: Map<string, Reaction>,
): string {
  const year = item.year === null ? '' : ` (${item.year})`;
  const marked = pending.get(item.item_id);
  const buttons = marked
    ? `<button class="undo" data-item="${escapeHtml(item.item_id)}">undo ${marked}</button>`
    : `<button class="like" data-item="${escapeHtml(item.item_id)}">liked it</button>` +
      `<button class="seen" data-item="${escapeHtml(item.item_id)}">seen it</button>`;
  return (
    `<div class="card${marked ? ' marked' : ''}" data-item="${escapeHtml(item.item_id)}">` +
    `<div class="card-title">${escapeHtml(item.title)}${year}</div>` +
    `<div class="score-bar"><div class="score-fill" style="width:${scoreBarWidth(item.score)}%"></div></div>` +
    `<div class="card-meta"><span class="score">${item.score.toFixed(4)}</span>` +
    `<span class="badge ${item.provenance}">${BADGE_LABELS[item.provenance] ?? item.provenance}</span></div>` +
    `<div class="card-actions">${buttons}</div>` +
    `</div>`
  );
}

export function renderResults(
  response: RecommendResponse | null,
  pending: Map<string, Reaction>,
): string {
  if (response === null) return '<p class="placeholder">No recommendations yet.</p>';
  const banner = response.fallback_used
    ? '<div class="banner fallback-banner">No suggested title matched the catalog; ' +
      'showing popularity fallback.</div>'
    : '';
  const diag = response.diagnostics;
  const cards = response.items.map((item) => renderCard(item, pending)).join('\n');
  return (
    banner +
    `<div class="cards">${cards}</div>` +
    `<div class="diagnostics">parsed ${diag.n_parsed} / matched ${diag.n_matched}` +
    ` / ambiguous ${diag.n_ambiguous}</div>`
  );
}

export function renderError(message: string | null): string {
  if (!message) return '';
  return `<div class="banner error-banner">${escapeHtml(message)} ` +
    `<button id="retry">retry</button></div>`;
}
