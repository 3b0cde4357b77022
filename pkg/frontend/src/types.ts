/** Payload shapes served by the pipeline HTTP API (see ../docs/api.md). */

export type RunStatus = 'RUNNING' | 'PAUSED' | 'COMPLETED' | 'FAILED';
export type ActionState = 'PENDING' | 'APPROVED' | 'REJECTED' | 'EXPIRED';

export interface RunHandle {
  run_id: string;
  mode: string;
  status: RunStatus;
  progress: { processed: number; total: number };
  error: string | null;
}

export interface Verdict {
  is_attack: boolean;
  threat_type: string;
  severity: 'LOW' | 'MEDIUM' | 'HIGH';
  confidence: number;
  rationale: string;
  source_agent?: string;
}

export interface Consensus {
  is_attack: boolean;
  threat_type: string;
  severity: 'LOW' | 'MEDIUM' | 'HIGH';
  confidence: number;
  method_note: string;
}

export interface PlanAction {
  action: string;
  target: string;
}

export interface Plan {
  actions: PlanAction[];
  requires_approval: boolean;
}

export interface Report {
  summary: string;
  technique: { technique_id: string; name: string } | null;
  event_fields: Record<string, unknown>;
  verdict_ref: Verdict;
}

export interface PendingAction {
  action_id: string;
  run_id: string;
  event_id: number;
  action: string;
  target: string;
  state: ActionState;
  decided_by: string | null;
  decided_at_ms: number | null;
  note: string | null;
}

export interface EventRecord {
  event_id: number;
  src_ip: string;
  dst_ip: string;
  dst_port: number;
  protocol: string;
  bytes_sent: number;
  packets: number;
  duration_ms: number;
  label?: { is_attack: boolean; threat_type: string | null } | null;
}

/** One `event: result` SSE frame / one item of GET /runs/{id}/events. */
export interface ResultEvent {
  event_id: number;
  record: EventRecord;
  verdict: Verdict | null;
  enrichment: unknown;
  consensus: Consensus | null;
  plan: Plan | null;
  report: Report | null;
  latency_ms: number;
  fallback_used: boolean;
  error: string | null;
  pending_actions: PendingAction[];
}

export interface ConfusionMatrix {
  tp: number;
  fn: number;
  fp: number;
  tn: number;
}

export interface MetricsReport {
  matrix: ConfusionMatrix;
  accuracy: number;
  precision: number;
  recall: number;
  f1: number;
  fpr: number;
  undefined: string[];
  mean_confidence: number | null;
  mean_latency_ms: number | null;
  n_excluded: number;
}

export interface MetricsResponse {
  run_id: string;
  partial: boolean;
  metrics: MetricsReport;
  severity_distribution: {
    severity_counts: Record<string, number>;
    type_counts: Record<string, number>;
  };
}

export interface AuditEntry {
  index: number;
  timestamp_ms: number;
  sender: string;
  recipient: string;
  payload_digest: string;
  outcome: string;
  detail: string;
}

export interface RunRequest {
  mode?: string;
  provider?: string;
  fixture?: string;
  dataset_id?: string;
  records?: number;
  attacks?: number;
  seed?: number;
  delay_ms?: number;
  stage_delay_ms?: number;
  endpoint_url?: string;
}
