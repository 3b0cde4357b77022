import { createServer, type Server } from 'node:http';
import type { AddressInfo } from 'node:net';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/client.js';
import type { PendingAction, ResultEvent, RunHandle } from '../src/types.js';

function sampleResult(eventId: number): ResultEvent {
  return {
    event_id: eventId,
    record: {
      event_id: eventId,
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
    latency_ms: 1.0,
    fallback_used: false,
    error: null,
    pending_actions: [],
  };
}

const RUN: RunHandle = {
  run_id: 'run-1',
  mode: 'SIMULATION',
  status: 'RUNNING',
  progress: { processed: 0, total: 3 },
  error: null,
};

const ACTION: PendingAction = {
  action_id: 'act-1',
  run_id: 'run-1',
  event_id: 2,
  action: 'CONTAIN_HOST',
  target: '192.168.1.10',
  state: 'PENDING',
  decided_by: null,
  decided_at_ms: null,
  note: null,
};

/** Minimal in-process stand-in for the pipeline API, for client tests. */
function mockServer(): Server {
  return createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on('data', (c: Buffer) => chunks.push(c));
    req.on('end', () => {
      const body = Buffer.concat(chunks).toString('utf8');
      const url = new URL(req.url ?? '/', 'http://localhost');
      const route = `${req.method} ${url.pathname}`;

      const json = (status: number, payload: unknown): void => {
        res.writeHead(status, { 'Content-Type': 'application/json' });
        res.end(JSON.stringify(payload));
      };

      switch (route) {
        case 'GET /health':
          return json(200, { status: 'ok' });
        case 'POST /runs': {
          const request = JSON.parse(body) as Record<string, unknown>;
          if (request['mode'] === 'BROKEN') {
            return json(400, { detail: { code: 'BAD_CONFIG', message: 'unsupported mode' } });
          }
          return json(200, { ...RUN, mode: String(request['mode'] ?? 'SIMULATION') });
        }
        case 'GET /runs/run-1':
          return json(200, { ...RUN, status: 'COMPLETED' });
        case 'GET /runs/run-1/stream': {
          res.writeHead(200, { 'Content-Type': 'text/event-stream' });
          for (let i = 1; i <= 3; i += 1) {
            res.write(`id: ${i}\nevent: result\ndata: ${JSON.stringify(sampleResult(i))}\n\n`);
          }
          const done = { ...RUN, status: 'COMPLETED', progress: { processed: 3, total: 3 } };
          res.end(`event: end\ndata: ${JSON.stringify(done)}\n\n`);
          return;
        }
        case 'GET /runs/run-truncated/stream': {
          res.writeHead(200, { 'Content-Type': 'text/event-stream' });
          res.end(`event: result\ndata: ${JSON.stringify(sampleResult(1))}\n\n`);
          return;
        }
        case 'GET /runs/run-1/events':
          return json(200, {
            run_id: 'run-1',
            page: Number(url.searchParams.get('page') ?? 0),
            total: 3,
            events: [sampleResult(1)],
          });
        case 'GET /actions':
          return json(200, {
            actions: url.searchParams.get('state') === 'APPROVED' ? [] : [ACTION],
          });
        case 'POST /actions/act-1/decision': {
          const decision = JSON.parse(body) as Record<string, unknown>;
          return json(200, {
            ...ACTION,
            state: decision['decision'] === 'APPROVE' ? 'APPROVED' : 'REJECTED',
            decided_by: decision['operator'],
            decided_at_ms: 1,
          });
        }
        case 'POST /actions/act-done/decision':
          return json(409, { detail: { code: 'ALREADY_DECIDED', message: 'already decided' } });
        case 'POST /datasets':
          if (req.headers['content-type'] !== 'text/csv') {
            return json(400, { code: 'MALFORMED_CSV', message: 'expected text/csv' });
          }
          return json(200, { dataset_id: 'ds-1', records: body.split('\n').length - 1 });
        default:
          return json(404, { detail: { code: 'NOT_FOUND', message: `no route ${route}` } });
      }
    });
  });
}

describe('ApiClient', () => {
  let server: Server;
  let client: ApiClient;

  beforeAll(async () => {
    server = mockServer();
    await new Promise<void>((resolve) => server.listen(0, '127.0.0.1', resolve));
    const { address, port } = server.address() as AddressInfo;
    client = new ApiClient(`http://${address}:${port}`);
  });

  afterAll(async () => {
    await new Promise<void>((resolve, reject) =>
      server.close((err) => (err ? reject(err) : resolve())),
    );
  });

  it('reports health', async () => {
    expect(await client.health()).toEqual({ status: 'ok' });
  });

  it('starts a run', async () => {
    const run = await client.startRun({ mode: 'SIMULATION', records: 3 });
    expect(run.run_id).toBe('run-1');
    expect(run.mode).toBe('SIMULATION');
  });

  it('surfaces structured errors as ApiError', async () => {
    const failure = client.startRun({ mode: 'BROKEN' });
    await expect(failure).rejects.toBeInstanceOf(ApiError);
    await failure.catch((err: ApiError) => {
      expect(err.status).toBe(400);
      expect(err.code).toBe('BAD_CONFIG');
      expect(err.message).toBe('unsupported mode');
    });
  });

  it('maps 404s with the server-provided code', async () => {
    await client.getRun('missing').then(
      () => {
        throw new Error('expected rejection');
      },
      (err: ApiError) => {
        expect(err.status).toBe(404);
        expect(err.code).toBe('NOT_FOUND');
      },
    );
  });

  it('streams results and resolves end with the final handle', async () => {
    const stream = await client.streamRun('run-1');
    const ids: number[] = [];
    for await (const result of stream.results) ids.push(result.event_id);
    expect(ids).toEqual([1, 2, 3]);
    const final = await stream.end;
    expect(final.status).toBe('COMPLETED');
    expect(final.progress.processed).toBe(3);
  });

  it('rejects end when the stream closes without an end frame', async () => {
    const stream = await client.streamRun('run-truncated');
    const rejected = stream.end.catch((err: Error) => err.message);
    for await (const result of stream.results) expect(result.event_id).toBe(1);
    expect(await rejected).toMatch(/before end frame/);
  });

  it('fetches paginated events', async () => {
    const page = await client.getEvents('run-1', 0, 1);
    expect(page.total).toBe(3);
    expect(page.events).toHaveLength(1);
  });

  it('lists and filters actions', async () => {
    const all = await client.listActions('run-1');
    expect(all.actions).toHaveLength(1);
    const approved = await client.listActions('run-1', 'APPROVED');
    expect(approved.actions).toHaveLength(0);
  });

  it('decides actions', async () => {
    const decided = await client.decideAction('act-1', 'APPROVE', 'analyst');
    expect(decided.state).toBe('APPROVED');
    expect(decided.decided_by).toBe('analyst');
  });

  it('maps decision conflicts to ApiError 409', async () => {
    await client.decideAction('act-done', 'APPROVE', 'analyst').then(
      () => {
        throw new Error('expected rejection');
      },
      (err: ApiError) => {
        expect(err.status).toBe(409);
        expect(err.code).toBe('ALREADY_DECIDED');
      },
    );
  });

  it('uploads datasets as text/csv', async () => {
    const upload = await client.uploadDataset('event_id,src_ip\n1,192.168.1.10\n');
    expect(upload.dataset_id).toBe('ds-1');
    expect(upload.records).toBeGreaterThan(0);
  });
});
