/** Terminal dashboard: start (or attach to) a run, follow its SSE stream,
 * and print live state.  Usage:
 *
 *   node dist/index.js --base http://127.0.0.1:8741 [--run RUN_ID]
 *     [--fixture paper] [--provider scripted] [--approve-all operator]
 */

import { ApiClient } from './client.js';
import { renderDashboard } from './render.js';
import { DashboardStore } from './store.js';

interface Options {
  base: string;
  run?: string;
  fixture?: string;
  provider: string;
  approveAll?: string;
  token?: string;
}

function parseArgs(argv: string[]): Options {
  const options: Options = { base: 'http://127.0.0.1:8741', provider: 'rules' };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => argv[++i] ?? '';
    if (arg === '--base') options.base = next();
    else if (arg === '--run') options.run = next();
    else if (arg === '--fixture') options.fixture = next();
    else if (arg === '--provider') options.provider = next();
    else if (arg === '--approve-all') options.approveAll = next();
    else if (arg === '--token') options.token = next();
  }
  return options;
}

export async function main(argv = process.argv.slice(2)): Promise<void> {
  const options = parseArgs(argv);
  const client = new ApiClient(options.base, options.token);
  const store = new DashboardStore();

  let runId = options.run;
  if (!runId) {
    const handle = await client.startRun({
      provider: options.provider.toUpperCase(),
      ...(options.fixture ? { fixture: options.fixture } : {}),
    });
    runId = handle.run_id;
    store.setRun(handle);
  } else {
    store.setRun(await client.getRun(runId));
  }

  const stream = await client.streamRun(runId);
  for await (const event of stream.results) {
    store.applyResult(event);
    if (options.approveAll) {
      for (const action of store.pending()) {
        store.applyDecision(
          await client.decideAction(action.action_id, 'APPROVE', options.approveAll),
        );
      }
    }
  }
  store.setRun(await stream.end);
  store.setMetrics(await client.getMetrics(runId));
  console.log(renderDashboard(store.state));
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('index.js')) {
  main().catch((err) => {
    console.error(String(err));
    process.exit(1);
  });
}
