/**
 * HTTP wire protocol around an Engine.
 *
 *   POST /v1/summarize {"requests": [{"id", "input", "max_new_tokens", "prefix"?}]}
 *     -> 200 {"responses": [{"id", "summary"}]}
 *   POST /v1/embed {"texts": [...]} -> 200 {"vectors": [[...], ...]}
 *   GET  /v1/health -> 200 {"status": "ok"}
 *
 * Every failure is `{"error": string}` with a non-200 status. Inputs are
 * truncated to the configured token budget with the engine's own
 * tokenizer before generation, so over-long requests never fail.
 */

import express, { type Express } from 'express';
import { z } from 'zod';

import type { AdapterConfig } from './config.js';
import type { Engine } from './engine.js';

const summarizeBody = z.object({
  requests: z.array(
    z.object({
      id: z.string().min(1),
      input: z.string(),
      max_new_tokens: z.number().int().min(1).optional(),
      prefix: z.string().optional(),
    }),
  ),
});

const embedBody = z.object({
  texts: z.array(z.string()),
});

export function buildApp(engine: Engine, config: AdapterConfig): Express {
  const app = express();
  app.use(express.json({ limit: '16mb' }));

  app.get('/v1/health', (_req, res) => {
    res.json({ status: 'ok' });
  });

  app.post('/v1/summarize', async (req, res) => {
    const parsed = summarizeBody.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: `bad summarize body: ${parsed.error.issues[0]?.message}` });
      return;
    }
    try {
      const responses = await Promise.all(
        parsed.data.requests.map(async (request) => {
          const bounded = engine.truncate(request.input, config.maxInputTokens);
          const summary = await engine.summarize(
            bounded,
            request.max_new_tokens ?? config.generation.maxNewTokens,
            request.prefix,
          );
          return { id: request.id, summary };
        }),
      );
      res.json({ responses });
    } catch (err) {
      res.status(500).json({ error: message(err) });
    }
  });

  app.post('/v1/embed', async (req, res) => {
    const parsed = embedBody.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: `bad embed body: ${parsed.error.issues[0]?.message}` });
      return;
    }
    try {
      res.json({ vectors: await engine.embed(parsed.data.texts) });
    } catch (err) {
      res.status(500).json({ error: message(err) });
    }
  });

  app.use((_req, res) => {
    res.status(404).json({ error: 'no such endpoint' });
  });

  // express body-parser failures (malformed JSON) land here
  app.use((err: unknown, _req: express.Request, res: express.Response, _next: express.NextFunction) => {
    res.status(400).json({ error: message(err) });
  });

  return app;
}

function message(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
