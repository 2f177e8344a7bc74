/**
 * Express app exposing an AdapterBackend under the /v1 protocol,
 * byte-compatible with the orchestrator's other backends.
 */

import express, { Express, NextFunction, Request, Response } from 'express';

import { AdapterBackend } from './bindings.js';
import { ProtocolError } from './protocol.js';

function intArray(value: unknown, field: string): number[] {
  if (!Array.isArray(value)) {
    throw new ProtocolError('bad_request', `${field} must be an array of integers`);
  }
  return value.map((v) => {
    if (typeof v !== 'number' || !Number.isInteger(v)) {
      throw new ProtocolError('bad_request', `${field} must contain only integers`);
    }
    return v;
  });
}

function optIntArray(value: unknown, field: string): number[] | null {
  return value === undefined || value === null ? null : intArray(value, field);
}

function str(value: unknown, field: string): string {
  if (typeof value !== 'string') {
    throw new ProtocolError('bad_request', `${field} must be a string`);
  }
  return value;
}

export function createApp(backend: AdapterBackend): Express {
  const app = express();
  app.use(express.json({ limit: '16mb' }));

  app.get('/v1/models', (_req, res) => {
    res.json(backend.models());
  });

  app.post('/v1/logits', (req, res) => {
    const body = req.body ?? {};
    res.json(
      backend.nextLogits(
        str(body.model, 'model'),
        intArray(body.tokens, 'tokens'),
        optIntArray(body.context_tokens, 'context_tokens'),
        optIntArray(body.include_tokens, 'include_tokens'),
      ),
    );
  });

  app.post('/v1/score', (req, res) => {
    const body = req.body ?? {};
    res.json({
      logprobs: backend.scoreSequence(
        str(body.model, 'model'),
        intArray(body.tokens, 'tokens'),
        optIntArray(body.context_tokens, 'context_tokens'),
      ),
    });
  });

  app.post('/v1/tokenize', (req, res) => {
    const body = req.body ?? {};
    res.json({ tokens: backend.tokenize(str(body.model, 'model'), str(body.text, 'text')) });
  });

  app.post('/v1/detokenize', (req, res) => {
    const body = req.body ?? {};
    res.json({ text: backend.detokenize(str(body.model, 'model'), intArray(body.tokens, 'tokens')) });
  });

  app.post('/v1/infer', (req, res) => {
    const body = req.body ?? {};
    if (!Array.isArray(body.relations)) {
      throw new ProtocolError('bad_request', 'relations must be an array');
    }
    res.json({
      clauses: backend.inferClauses(
        str(body.model, 'model'),
        str(body.text, 'text'),
        body.relations.map((r: unknown) => String(r)),
        Number(body.count ?? 0),
      ),
    });
  });

  app.post('/v1/extract', (req, res) => {
    const body = req.body ?? {};
    res.json(
      backend.extractSpan(str(body.model, 'model'), str(body.context, 'context'), str(body.question, 'question')),
    );
  });

  app.use((req, res) => {
    res.status(404).json({ error: { type: 'not_found', message: `no such endpoint: ${req.path}` } });
  });

  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    if (err instanceof ProtocolError) {
      res.status(err.status).json({ error: { type: err.kind, message: err.message } });
    } else if (err.name === 'SyntaxError' || (err as { type?: string }).type === 'entity.parse.failed') {
      res.status(400).json({ error: { type: 'bad_request', message: 'body is not valid JSON' } });
    } else {
      res.status(500).json({ error: { type: 'internal', message: err.message } });
    }
  });

  return app;
}
