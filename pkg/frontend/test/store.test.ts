import { describe, expect, it } from 'vitest';

import { DashboardStore, feedRow } from '../src/store.js';
import type { PendingAction, ResultEvent } from '../src/types.js';

function makeResult(overrides: Partial<ResultEvent> = {}): ResultEvent {
  return {
    event_id: 1,
    record: {
      event_id: 1,
      src_ip: '192.168.1.10',
      dst_ip: '10.0.0.5',
      dst_port: 443,
      protocol: 'TCP',
      bytes_sent: 1200,
      packets: 10,
      duration_ms: 50,
    },
    verdict: null,
    enrichment: null,
    consensus: {
      is_attack: false,
      threat_type: 'BENIGN',
      severity: 'LOW',
      confidence: 0.7,
      method_note: 'agreement',
    },
    plan: null,
    report: null,
    latency_ms: 12.5,
    fallback_used: false,
    error: null,
    pending_actions: [],
    ...overrides,
  };
}

function attackResult(eventId: number, severity: 'LOW' | 'MEDIUM' | 'HIGH'): ResultEvent {
  return makeResult({
    event_id: eventId,
    consensus: {
      is_attack: true,
      threat_type: 'DATA_EXFILTRATION',
      severity,
      confidence: 0.7,
      method_note: 'agreement',
    },
  });
}

function action(id: string, eventId: number, state: PendingAction['state']): PendingAction {
  return {
    action_id: id,
    run_id: 'r1',
    event_id: eventId,
    action: 'CONTAIN_HOST',
    target: '192.168.1.10',
    state,
    decided_by: null,
    decided_at_ms: null,
    note: null,
  };
}

describe('feedRow', () => {
  it('labels benign consensus as BENIGN', () => {
    expect(feedRow(makeResult()).verdict).toBe('BENIGN');
  });

  it('labels attacks with the threat type', () => {
    const row = feedRow(attackResult(3, 'HIGH'));
    expect(row.verdict).toBe('DATA_EXFILTRATION');
    expect(row.severity).toBe('HIGH');
  });

  it('labels errored events FAILED', () => {
    const row = feedRow(makeResult({ error: 'PROVIDER_FAILED: boom', consensus: null }));
    expect(row.verdict).toBe('FAILED');
    expect(row.error).toContain('PROVIDER_FAILED');
  });

  it('formats the flow string from the record', () => {
    expect(feedRow(makeResult()).flow).toBe('TCP 192.168.1.10 -> 10.0.0.5:443');
  });
});

describe('DashboardStore', () => {
  it('accumulates totals and severity counts', () => {
    const store = new DashboardStore();
    store.applyResult(makeResult({ event_id: 1 }));
    store.applyResult(attackResult(2, 'HIGH'));
    store.applyResult(attackResult(3, 'MEDIUM'));
    store.applyResult(makeResult({ event_id: 4, error: 'STAGE_FAILED', consensus: null }));
    store.applyResult(makeResult({ event_id: 5, fallback_used: true }));

    expect(store.state.totals).toEqual({
      processed: 5,
      attacks: 2,
      benign: 2,
      failed: 1,
      fallbacks: 1,
    });
    expect(store.state.severityCounts).toEqual({ LOW: 0, MEDIUM: 1, HIGH: 1 });
    expect(store.state.feed).toHaveLength(5);
  });

  it('is idempotent per event id (snapshot overlap on reconnect)', () => {
    const store = new DashboardStore();
    const event = attackResult(7, 'HIGH');
    store.applyResult(event);
    store.applyResult(event);
    store.applyResult({ ...event });
    expect(store.state.totals.processed).toBe(1);
    expect(store.state.feed).toHaveLength(1);
    expect(store.state.severityCounts['HIGH']).toBe(1);
  });

  it('collects pending actions from results', () => {
    const store = new DashboardStore();
    store.applyResult(
      makeResult({ event_id: 9, pending_actions: [action('a-2', 9, 'PENDING')] }),
    );
    store.applyResult(
      makeResult({
        event_id: 4,
        pending_actions: [action('a-1', 4, 'PENDING'), action('a-0', 4, 'APPROVED')],
      }),
    );
    expect(store.pending().map((a) => a.action_id)).toEqual(['a-1', 'a-2']);
  });

  it('sorts pending actions by event id, then action id', () => {
    const store = new DashboardStore();
    store.applyResult(
      makeResult({
        event_id: 5,
        pending_actions: [action('b', 5, 'PENDING'), action('a', 5, 'PENDING')],
      }),
    );
    expect(store.pending().map((a) => a.action_id)).toEqual(['a', 'b']);
  });

  it('removes actions from pending once decided', () => {
    const store = new DashboardStore();
    store.applyResult(makeResult({ event_id: 1, pending_actions: [action('a-1', 1, 'PENDING')] }));
    expect(store.pending()).toHaveLength(1);
    store.applyDecision(action('a-1', 1, 'APPROVED'));
    expect(store.pending()).toHaveLength(0);
    expect(store.state.pendingActions.get('a-1')?.state).toBe('APPROVED');
  });
});
