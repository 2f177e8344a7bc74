/**
 * End-to-end smoke: the Python orchestrator runs one full iteration of
 * its question-answering pipeline against this adapter's small trained
 * checkpoints, through the real wire protocol and CLI.
 *
 * The adapter runs as a separate process (the orchestrator CLI call is
 * synchronous, so an in-process server would deadlock the event loop).
 * Skipped when the orchestrator package is not importable on this host.
 */

import { ChildProcess, execFileSync, spawn, spawnSync } from 'node:child_process';
import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO = path.resolve(HERE, '..', '..');
const SERVER_JS = path.resolve(HERE, '..', 'dist', 'main.js');

function pythonWithOrchestrator(): string | null {
  for (const candidate of ['python3', 'python']) {
    const probe = spawnSync(candidate, ['-c', 'import retrogen'], { encoding: 'utf-8' });
    if (probe.status === 0) return candidate;
  }
  return null;
}

const PYTHON = pythonWithOrchestrator();

let serverProc: ChildProcess;
let baseUrl: string;
let workDir: string;

beforeAll(async () => {
  if (!fs.existsSync(SERVER_JS)) {
    execFileSync('npx', ['tsc'], { cwd: path.resolve(HERE, '..') });
  }
  serverProc = spawn('node', [SERVER_JS, 'serve', '--port', '0'], { stdio: ['ignore', 'pipe', 'pipe'] });
  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('adapter did not print its port')), 15_000);
    serverProc.stdout!.once('data', (chunk: Buffer) => {
      clearTimeout(timer);
      resolve(Number(chunk.toString().trim().split('\n')[0]));
    });
    serverProc.once('exit', (code) => reject(new Error(`adapter exited early (${code})`)));
  });
  baseUrl = `http://127.0.0.1:${port}`;
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-smoke-'));
}, 30_000);

afterAll(() => {
  serverProc?.kill();
  if (workDir) fs.rmSync(workDir, { recursive: true, force: true });
});

describe.skipIf(PYTHON === null)('orchestrator end-to-end against the adapter', () => {
  it('completes one generation iteration over the wire', () => {
    const ending = path.join(workDir, 'ending.txt');
    fs.writeFileSync(
      ending,
      'Hansel pushed open the door at last. Gretel followed him into the dark hut.',
    );
    const config = path.join(workDir, 'config.json');
    fs.writeFileSync(
      config,
      JSON.stringify({ seed: 7, iterations: 1, beam_width: 3, max_length: 12, question_budget: 2, window_size: 2 }),
    );
    const out = path.join(workDir, 'run');
    execFileSync(
      PYTHON!,
      [
        '-m', 'retrogen.cli', 'generate', 'edgar',
        '--ending', ending,
        '--corpus', path.join(REPO, 'tests', 'data', 'corpus'),
        '--config', config,
        '--backend-url', baseUrl,
        '--out', out,
        '--qa-model', 'adapter-qa',
        '--ranker-model', 'adapter-ranker',
        '--infer-model', 'adapter-infer',
        '--extract-model', 'adapter-extract',
      ],
      { stdio: 'pipe', timeout: 240_000 },
    );
    const story = fs.readFileSync(path.join(out, 'story.txt'), 'utf-8');
    expect(story.trimEnd().endsWith('Gretel followed him into the dark hut.')).toBe(true);
    const trace = JSON.parse(fs.readFileSync(path.join(out, 'trace.json'), 'utf-8'));
    expect(trace.iterations).toHaveLength(1);
    expect(trace.iterations[0].questions.length).toBeGreaterThan(0);
    expect(trace.iterations[0].candidates.length).toBeGreaterThan(0);
  }, 240_000);

  it('baseline generator also runs against the adapter', () => {
    const ending = path.join(workDir, 'ending2.txt');
    fs.writeFileSync(ending, 'The story was over. Nobody noticed the chalk marks fade.');
    const out = path.join(workDir, 'run2');
    execFileSync(
      PYTHON!,
      [
        '-m', 'retrogen.cli', 'generate', 'bbart',
        '--ending', ending,
        '--iterations', '1', '--beam-width', '2', '--max-length', '8',
        '--backend-url', baseUrl,
        '--model', 'adapter-seq2seq',
        '--out', out,
      ],
      { stdio: 'pipe', timeout: 120_000 },
    );
    const story = fs.readFileSync(path.join(out, 'story.txt'), 'utf-8');
    expect(story).toContain('Nobody noticed the chalk marks fade.');
  }, 120_000);
});
