/** Typed client for the pipeline HTTP API (see ../docs/api.md). */

import { sseFrames } from './sse.js';
import type {
  AuditEntry,
  MetricsResponse,
  PendingAction,
  ResultEvent,
  RunHandle,
  RunRequest,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export interface RunStream {
  results: AsyncGenerator<ResultEvent>;
  /** Resolves with the final run handle once the `end` frame arrives. */
  end: Promise<RunHandle>;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private headers(json = true): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h['Content-Type'] = 'application/json';
    if (this.token) h['Authorization'] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(body !== undefined),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = `HTTP_${response.status}`;
      let message = response.statusText;
      try {
        const payload = (await response.json()) as Record<string, unknown>;
        const detail = (payload['detail'] ?? payload) as Record<string, unknown>;
        if (typeof detail['code'] === 'string') code = detail['code'];
        if (typeof detail['message'] === 'string') message = detail['message'];
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/health');
  }

  startRun(request: RunRequest): Promise<RunHandle> {
    return this.request('POST', '/runs', request);
  }

  getRun(runId: string): Promise<RunHandle> {
    return this.request('GET', `/runs/${runId}`);
  }

  getMetrics(runId: string): Promise<MetricsResponse> {
    return this.request('GET', `/runs/${runId}/metrics`);
  }

  getEvents(
    runId: string,
    page = 0,
    pageSize = 50,
  ): Promise<{ run_id: string; page: number; total: number; events: ResultEvent[] }> {
    return this.request('GET', `/runs/${runId}/events?page=${page}&page_size=${pageSize}`);
  }

  getAudit(runId: string): Promise<{ run_id: string; entries: AuditEntry[] }> {
    return this.request('GET', `/runs/${runId}/audit`);
  }

  listActions(runId?: string, state?: string): Promise<{ actions: PendingAction[] }> {
    const query = new URLSearchParams();
    if (runId) query.set('run_id', runId);
    if (state) query.set('state', state);
    const suffix = query.size ? `?${query}` : '';
    return this.request('GET', `/actions${suffix}`);
  }

  decideAction(
    actionId: string,
    decision: 'APPROVE' | 'REJECT',
    operator: string,
    note?: string,
  ): Promise<PendingAction> {
    return this.request('POST', `/actions/${actionId}/decision`, { decision, operator, note });
  }

  async uploadDataset(csv: string | Uint8Array): Promise<{ dataset_id: string; records: number }> {
    const body = typeof csv === 'string' ? csv : new Blob([csv as BlobPart]);
    const response = await fetch(`${this.baseUrl}/datasets`, {
      method: 'POST',
      headers: { ...this.headers(false), 'Content-Type': 'text/csv' },
      body,
    });
    if (!response.ok) {
      const payload = (await response.json().catch(() => ({}))) as Record<string, unknown>;
      throw new ApiError(
        response.status,
        String(payload['code'] ?? `HTTP_${response.status}`),
        String(payload['message'] ?? response.statusText),
      );
    }
    return (await response.json()) as { dataset_id: string; records: number };
  }

  /** Open the run's SSE stream: snapshot of processed events, then live tail,
   * terminated by an `end` frame with the final run handle. */
  async streamRun(runId: string): Promise<RunStream> {
    const response = await fetch(`${this.baseUrl}/runs/${runId}/stream`, {
      headers: this.headers(false),
    });
    if (!response.ok || !response.body) {
      throw new ApiError(response.status, `HTTP_${response.status}`, 'stream unavailable');
    }
    let resolveEnd!: (handle: RunHandle) => void;
    let rejectEnd!: (err: unknown) => void;
    const end = new Promise<RunHandle>((resolve, reject) => {
      resolveEnd = resolve;
      rejectEnd = reject;
    });
    const frames = sseFrames(response.body);

    async function* results(): AsyncGenerator<ResultEvent> {
      let ended = false;
      try {
        for await (const frame of frames) {
          if (frame.event === 'result') {
            yield JSON.parse(frame.data) as ResultEvent;
          } else if (frame.event === 'end') {
            resolveEnd(JSON.parse(frame.data) as RunHandle);
            ended = true;
            return;
          }
        }
        if (!ended) rejectEnd(new Error('stream closed before end frame'));
      } catch (err) {
        rejectEnd(err);
        throw err;
      }
    }

    return { results: results(), end };
  }
}
