/** Plain-text rendering of the dashboard state for terminal display. */

import type { DashboardState } from './store.js';

const pct = (value: number): string => `${(value * 100).toFixed(1)}%`;

export function renderHeader(state: DashboardState): string {
  const run = state.run;
  if (!run) return 'no run';
  const { processed, total } = run.progress;
  return `run ${run.run_id} [${run.mode}] ${run.status} ${processed}/${total}`;
}

export function renderFeed(state: DashboardState, limit = 15): string {
  const rows = state.feed.slice(-limit);
  if (rows.length === 0) return '(no events yet)';
  const lines = rows.map((row) => {
    const conf = row.confidence === null ? ' -  ' : row.confidence.toFixed(2);
    const flags = [row.fallback ? 'FB' : '', row.error ? `ERR:${row.error}` : '']
      .filter(Boolean)
      .join(' ');
    return (
      `#${String(row.eventId).padStart(4)} ` +
      `${row.verdict.padEnd(20)} ${row.severity.padEnd(6)} ` +
      `${conf}  ${row.latencyMs.toFixed(1).padStart(8)}ms  ${row.flow}` +
      (flags ? `  [${flags}]` : '')
    );
  });
  return lines.join('\n');
}

export function renderTotals(state: DashboardState): string {
  const t = state.totals;
  const sev = state.severityCounts;
  return (
    `processed ${t.processed} | attacks ${t.attacks} | benign ${t.benign} | ` +
    `failed ${t.failed} | fallbacks ${t.fallbacks} | ` +
    `severity H:${sev['HIGH'] ?? 0} M:${sev['MEDIUM'] ?? 0} L:${sev['LOW'] ?? 0}`
  );
}

export function renderMetrics(state: DashboardState): string {
  const m = state.metrics;
  if (!m) return '(no metrics yet)';
  const r = m.metrics;
  const matrix = r.matrix;
  const partial = m.partial ? ' (partial)' : '';
  return [
    `confusion${partial}: TP ${matrix.tp}  FN ${matrix.fn}  FP ${matrix.fp}  TN ${matrix.tn}`,
    `accuracy ${pct(r.accuracy)} | precision ${pct(r.precision)} | ` +
      `recall ${pct(r.recall)} | f1 ${pct(r.f1)} | fpr ${pct(r.fpr)}`,
  ].join('\n');
}

export function renderActions(state: DashboardState): string {
  const pending = [...state.pendingActions.values()].filter((a) => a.state === 'PENDING');
  if (pending.length === 0) return '(approval queue empty)';
  return pending
    .map((a) => `[${a.action_id}] event ${a.event_id}: ${a.action} ${a.target}`)
    .join('\n');
}

export function renderDashboard(state: DashboardState): string {
  return [
    renderHeader(state),
    renderTotals(state),
    '',
    renderFeed(state),
    '',
    renderMetrics(state),
    '',
    'pending approvals:',
    renderActions(state),
  ].join('\n');
}
