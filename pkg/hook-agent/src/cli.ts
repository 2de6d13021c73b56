/**
 * Host collector CLI: `collect --config hooks.json --out capture.csv [--pid N]`.
 *
 * The agent channel is stdin: one JSON AgentMessage per line, exactly what
 * the injected agent emits. Live process attachment (--pid) needs an
 * injection runtime and is refused here with a clear message.
 */
import { createInterface } from 'node:readline';
import { loadConfig } from './config.js';
import { Collector } from './collector.js';
import { DATA_CATEGORIES, type AgentMessage } from './types.js';

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (!arg.startsWith('--')) continue;
    args.set(arg.slice(2), argv[i + 1] ?? '');
    i += 1;
  }
  return args;
}

async function main(): Promise<number> {
  const argv = process.argv.slice(2);
  if (argv[0] !== 'collect') {
    console.error('usage: collect --config hooks.json --out capture.csv [--pid <target>]');
    return 1;
  }
  const args = parseArgs(argv.slice(1));
  const configPath = args.get('config');
  const outPath = args.get('out');
  if (!configPath || !outPath) {
    console.error('collect requires --config and --out');
    return 1;
  }
  if (args.has('pid')) {
    console.error(
      'live attachment is not available in this build; ' +
        'pipe the agent message stream into stdin instead',
    );
    return 1;
  }

  const config = loadConfig(configPath);
  console.error(`collector ready: ${config.entries.length} hook entries configured`);

  const collector = new Collector(outPath);
  collector.open();
  const categories = new Set<string>(DATA_CATEGORIES);
  let skipped = 0;
  const lines = createInterface({ input: process.stdin, crlfDelay: Infinity });
  for await (const line of lines) {
    if (!line.trim()) continue;
    let message: AgentMessage;
    try {
      message = JSON.parse(line);
    } catch {
      skipped += 1;
      continue;
    }
    if (!message.api_name || !categories.has(message.category)) {
      skipped += 1;
      continue;
    }
    collector.write(message);
  }
  collector.close();
  console.error(`wrote ${collector.rows} rows to ${outPath}` + (skipped ? `, skipped ${skipped}` : ''));
  return 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(String(err));
    process.exit(2);
  },
);
