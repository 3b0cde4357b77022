/** Dashboard view state, reduced from stream frames and approval decisions.
 * Pure data in, pure data out: no I/O here, which keeps it unit-testable.
 */

import type { MetricsResponse, PendingAction, ResultEvent, RunHandle } from './types.js';

export interface FeedRow {
  eventId: number;
  flow: string;
  verdict: string;
  severity: string;
  confidence: number | null;
  latencyMs: number;
  fallback: boolean;
  error: string | null;
}

export interface DashboardState {
  run: RunHandle | null;
  feed: FeedRow[];
  totals: {
    processed: number;
    attacks: number;
    benign: number;
    failed: number;
    fallbacks: number;
  };
  severityCounts: Record<string, number>;
  pendingActions: Map<string, PendingAction>;
  metrics: MetricsResponse | null;
}

export function emptyState(): DashboardState {
  return {
    run: null,
    feed: [],
    totals: { processed: 0, attacks: 0, benign: 0, failed: 0, fallbacks: 0 },
    severityCounts: { LOW: 0, MEDIUM: 0, HIGH: 0 },
    pendingActions: new Map(),
    metrics: null,
  };
}

export function feedRow(event: ResultEvent): FeedRow {
  const record = event.record;
  const consensus = event.consensus;
  return {
    eventId: event.event_id,
    flow: `${record.protocol} ${record.src_ip} -> ${record.dst_ip}:${record.dst_port}`,
    verdict: event.error
      ? 'FAILED'
      : consensus
        ? consensus.is_attack
          ? consensus.threat_type
          : 'BENIGN'
        : 'PENDING',
    severity: consensus?.severity ?? '-',
    confidence: consensus?.confidence ?? null,
    latencyMs: event.latency_ms,
    fallback: event.fallback_used,
    error: event.error,
  };
}

export class DashboardStore {
  readonly state: DashboardState = emptyState();
  private seen = new Set<number>();

  setRun(run: RunHandle): void {
    this.state.run = run;
  }

  setMetrics(metrics: MetricsResponse): void {
    this.state.metrics = metrics;
  }

  /** Idempotent: replaying an already-seen event (snapshot overlap after a
   * reconnect) changes nothing. */
  applyResult(event: ResultEvent): void {
    if (this.seen.has(event.event_id)) return;
    this.seen.add(event.event_id);

    this.state.feed.push(feedRow(event));
    const totals = this.state.totals;
    totals.processed += 1;
    if (event.error) {
      totals.failed += 1;
    } else if (event.consensus) {
      if (event.consensus.is_attack) {
        totals.attacks += 1;
        const severity = event.consensus.severity;
        this.state.severityCounts[severity] = (this.state.severityCounts[severity] ?? 0) + 1;
      } else {
        totals.benign += 1;
      }
    }
    if (event.fallback_used) totals.fallbacks += 1;
    for (const action of event.pending_actions) {
      this.state.pendingActions.set(action.action_id, action);
    }
  }

  applyDecision(action: PendingAction): void {
    this.state.pendingActions.set(action.action_id, action);
  }

  pending(): PendingAction[] {
    return [...this.state.pendingActions.values()]
      .filter((a) => a.state === 'PENDING')
      .sort((a, b) => a.event_id - b.event_id || a.action_id.localeCompare(b.action_id));
  }
}
