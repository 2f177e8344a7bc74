/**
 * CLI: `serve` starts the adapter (prints the bound port first, matching
 * the mock server's contract); `train` fits a charlm checkpoint from a
 * directory of .txt files.
 */

import fs from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

import { loadBindings } from './bindings.js';
import { trainCheckpoint } from './charlm.js';
import { createApp } from './server.js';

const HERE = path.dirname(fileURLToPath(import.meta.url));
const DEFAULT_BINDINGS = path.resolve(HERE, '..', 'bindings.json');

function flag(args: string[], name: string, fallback: string): string {
  const i = args.indexOf(name);
  return i >= 0 && i + 1 < args.length ? args[i + 1] : fallback;
}

function serve(args: string[]): void {
  const port = Number(flag(args, '--port', '0'));
  const host = flag(args, '--host', '127.0.0.1');
  const bindingsPath = flag(args, '--bindings', DEFAULT_BINDINGS);
  const backend = loadBindings(bindingsPath); // fail fast before binding the socket
  const app = createApp(backend);
  const server = app.listen(port, host, () => {
    const addr = server.address();
    const bound = typeof addr === 'object' && addr ? addr.port : port;
    console.log(bound);
    console.error(`adapter serving ${backend.models().length} models on ${host}:${bound}`);
  });
}

function train(args: string[]): void {
  const corpusDir = flag(args, '--corpus', path.resolve(HERE, '..', 'corpus'));
  const out = flag(args, '--out', path.resolve(HERE, '..', 'checkpoints', 'charlm.json'));
  const order = Number(flag(args, '--order', '3'));
  const files = fs
    .readdirSync(corpusDir)
    .filter((f) => f.endsWith('.txt'))
    .sort();
  if (files.length === 0) {
    console.error(`no .txt files in ${corpusDir}`);
    process.exit(1);
  }
  const docs = files.map((f) => ({
    name: f,
    text: fs.readFileSync(path.join(corpusDir, f), 'utf-8').trim(),
  }));
  const ckpt = trainCheckpoint(docs, order);
  fs.mkdirSync(path.dirname(out), { recursive: true });
  fs.writeFileSync(out, JSON.stringify(ckpt));
  console.error(`trained order-${order} charlm on ${files.length} docs -> ${out}`);
}

const [, , command, ...rest] = process.argv;
if (command === 'serve') {
  serve(rest);
} else if (command === 'train') {
  train(rest);
} else {
  console.error('usage: main.js serve [--port N] [--host H] [--bindings FILE]');
  console.error('       main.js train [--corpus DIR] [--out FILE] [--order N]');
  process.exit(1);
}
