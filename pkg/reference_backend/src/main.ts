/** CLI entry point: build the configured engine and serve the protocol. */

import { configFromArgs } from './config.js';
import { createEngine } from './engine.js';
import { buildApp } from './server.js';

async function main(): Promise<void> {
  const config = configFromArgs(process.argv.slice(2));
  const engine = await createEngine(config);
  const app = buildApp(engine, config);
  app.listen(config.port, () => {
    console.log(
      `reference backend (${engine.name}) listening on :${config.port}, ` +
        `max input ${config.maxInputTokens} tokens`,
    );
  });
}

main().catch((err) => {
  console.error(`startup failed: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
});
