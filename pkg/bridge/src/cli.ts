#!/usr/bin/env node
/**
 * Bridge entry point.
 *
 *   node dist/cli.js --config bridge.config.json            # TCP server
 *   node dist/cli.js --config bridge.config.json --stdio    # stdio session
 *   node dist/cli.js --config c.json --selftest goldens.jsonl
 */

import { loadBridge } from "./config.js";
import { runSelftest } from "./selftest.js";
import { serveStdio, startTcpServer } from "./server.js";

interface Args {
  config?: string;
  selftest?: string;
  port?: number;
  stdio: boolean;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { stdio: false };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--config") args.config = argv[++i];
    else if (arg === "--selftest") args.selftest = argv[++i];
    else if (arg === "--port") args.port = Number(argv[++i]);
    else if (arg === "--stdio") args.stdio = true;
    else {
      process.stderr.write(`unknown argument ${arg}\n`);
      process.exit(1);
    }
  }
  if (!args.config) {
    process.stderr.write("usage: cli.js --config FILE [--selftest FILE | --stdio | --port N]\n");
    process.exit(1);
  }
  return args;
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  const bridge = loadBridge(args.config!);
  if (args.selftest) {
    const failures = runSelftest(args.selftest, bridge.scorers);
    if (failures.length > 0) {
      for (const failure of failures) process.stderr.write(failure + "\n");
      process.stderr.write(`selftest: ${failures.length} failure(s)\n`);
      process.exit(1);
    }
    process.stdout.write("selftest: all golden pairs replayed\n");
    return;
  }
  if (args.stdio || bridge.config.stdio) {
    serveStdio(bridge.scorers);
    return;
  }
  const port = args.port ?? bridge.config.port ?? 0;
  const host = bridge.config.host ?? "127.0.0.1";
  const server = await startTcpServer(bridge.scorers, port, host);
  const address = server.address();
  const bound = typeof address === "object" && address ? address.port : port;
  process.stdout.write(`listening on ${host}:${bound}\n`);
}

main().catch((err) => {
  process.stderr.write(`fatal: ${err instanceof Error ? err.message : String(err)}\n`);
  process.exit(2);
});
