/**
 * Model bindings: which local model serves which advertised model id.
 *
 * The adapter performs no penalty logic; it only exposes raw logits,
 * scores, tokenization, inference clauses, and extraction spans. All
 * decoding-time transforms live in the orchestrator so behavior is
 * identical across backends.
 */

import fs from 'node:fs';
import path from 'node:path';

import { BOS, CharLm, Checkpoint, EOS, VOCAB_SIZE, detokenize, tokenizeText } from './charlm.js';
import {
  Clause,
  LogitsResponse,
  ModelCapability,
  ProtocolError,
  RELATIONS,
  SpanResponse,
  validateTokenIds,
} from './protocol.js';

export const MAX_CONTEXT = 4096;
export const TOP_K = 256; // /v1/logits truncation before include_tokens

export interface BindingConfig {
  model_id: string;
  kind: 'causal' | 'seq2seq' | 'infer' | 'extract';
  /** path to a charlm checkpoint, for causal/seq2seq bindings */
  checkpoint?: string;
}

interface TokenBinding {
  capability: ModelCapability;
  lm: CharLm;
}

const STOPWORDS = new Set(
  (
    'the a an he she it they them i we you who what why when where how which this that ' +
    'these those there his her hers their then so but and or if is was were be been in on ' +
    'at to of for with without however because once after before'
  ).split(/\s+/),
);

const INTENT_TEMPLATES = [
  'to find the {}',
  'to reach the {}',
  'to protect the {}',
  'to escape the {}',
  'to follow the {}',
  'to open the {}',
];
const NEED_TEMPLATES = [
  'a {}',
  'the {}',
  'a way to the {}',
  'help with the {}',
  'a path past the {}',
  'time near the {}',
];

/**
 * Map the orchestrator's canonical QA prompt ("question: ... context: ...")
 * into a binding's native conditioning text.
 *
 * charlm bindings condition on raw bytes, so their native input is the
 * canonical string itself; the mapping stays total and deterministic and
 * preserves the question text verbatim. A binding wrapping a model with
 * its own prompt format would override this per model id.
 */
export function mapQaPrompt(question: string, document: string): string {
  return `question: ${question} context: ${document}`;
}

/** Frequency-ranked content words, first occurrence breaking ties. */
export function contentWords(text: string): string[] {
  const counts = new Map<string, { n: number; first: number }>();
  const re = /\p{L}+/gu;
  let m: RegExpExecArray | null;
  let idx = 0;
  while ((m = re.exec(text)) !== null) {
    const word = m[0].toLowerCase();
    idx += 1;
    if (word.length < 3 || STOPWORDS.has(word)) continue;
    const entry = counts.get(word);
    if (entry) entry.n += 1;
    else counts.set(word, { n: 1, first: idx });
  }
  return [...counts.entries()]
    .sort((a, b) => b[1].n - a[1].n || a[1].first - b[1].first)
    .map(([w]) => w);
}

export class AdapterBackend {
  private tokenModels = new Map<string, TokenBinding>();
  private inferModels = new Map<string, ModelCapability>();
  private extractModels = new Map<string, ModelCapability>();

  constructor(configs: BindingConfig[], baseDir: string) {
    for (const cfg of configs) {
      if (cfg.kind === 'causal' || cfg.kind === 'seq2seq') {
        if (!cfg.checkpoint) {
          throw new Error(`binding ${cfg.model_id}: token models need a checkpoint path`);
        }
        const ckptPath = path.resolve(baseDir, cfg.checkpoint);
        let ckpt: Checkpoint;
        try {
          ckpt = JSON.parse(fs.readFileSync(ckptPath, 'utf-8')) as Checkpoint;
        } catch (err) {
          throw new Error(`binding ${cfg.model_id}: cannot load checkpoint ${ckptPath}: ${err}`);
        }
        this.tokenModels.set(cfg.model_id, {
          capability: {
            model_id: cfg.model_id,
            vocab_size: ckpt.vocab_size,
            kind: cfg.kind,
            max_context: MAX_CONTEXT,
            eos_token_id: EOS,
          },
          lm: new CharLm(ckpt),
        });
      } else if (cfg.kind === 'infer') {
        this.inferModels.set(cfg.model_id, {
          model_id: cfg.model_id,
          vocab_size: VOCAB_SIZE,
          kind: 'seq2seq',
          max_context: MAX_CONTEXT,
          eos_token_id: null,
        });
      } else {
        this.extractModels.set(cfg.model_id, {
          model_id: cfg.model_id,
          vocab_size: 0,
          kind: 'extractive',
          max_context: MAX_CONTEXT,
          eos_token_id: null,
        });
      }
    }
    if (this.tokenModels.size + this.inferModels.size + this.extractModels.size === 0) {
      throw new Error('no bindings configured');
    }
  }

  models(): ModelCapability[] {
    const all = [
      ...[...this.tokenModels.values()].map((b) => b.capability),
      ...this.inferModels.values(),
      ...this.extractModels.values(),
    ];
    return all.sort((a, b) => a.model_id.localeCompare(b.model_id));
  }

  private token(modelId: string): TokenBinding {
    const binding = this.tokenModels.get(modelId);
    if (binding) return binding;
    if (this.inferModels.has(modelId) || this.extractModels.has(modelId)) {
      throw new ProtocolError('unsupported_operation', `${modelId} does not serve token-level requests`);
    }
    throw new ProtocolError('unknown_model', `no model named ${modelId}`);
  }

  /** Effective LM conditioning stream: BOS, encoder context (if any),
   * then decoder tokens, so short-range context survives at the decoder
   * boundary. */
  private stream(binding: TokenBinding, tokens: number[], context: number[] | null): number[] {
    if (binding.capability.kind === 'seq2seq') {
      if (context === null) {
        throw new ProtocolError('missing_context', `${binding.capability.model_id} is seq2seq and requires context_tokens`);
      }
      return [BOS, ...context, ...tokens];
    }
    if (context !== null) {
      throw new ProtocolError('unexpected_context', `${binding.capability.model_id} is causal and takes no context_tokens`);
    }
    return [BOS, ...tokens];
  }

  nextLogits(
    modelId: string,
    tokens: number[],
    contextTokens: number[] | null,
    includeTokens: number[] | null,
  ): LogitsResponse {
    const binding = this.token(modelId);
    validateTokenIds(tokens, binding.capability.vocab_size);
    if (contextTokens) validateTokenIds(contextTokens, binding.capability.vocab_size);
    if (includeTokens) validateTokenIds(includeTokens, binding.capability.vocab_size);
    if (tokens.length >= binding.capability.max_context) {
      throw new ProtocolError('context_overflow', `${tokens.length} tokens exceed max_context`);
    }
    const stream = this.stream(binding, tokens, contextTokens);
    const row = binding.lm.logitRow(stream.slice(-(binding.lm.order - 1 || 1)));
    const ranked = [...row.keys()].sort((a, b) => row[b] - row[a] || a - b);
    const keep = new Set<number>(ranked.slice(0, TOP_K));
    for (const t of includeTokens ?? []) keep.add(t);
    const ids = [...keep].sort((a, b) => a - b);
    return {
      entries: ids.map((t) => [t, row[t]]),
      complete: ids.length === binding.capability.vocab_size,
    };
  }

  scoreSequence(modelId: string, tokens: number[], contextTokens: number[] | null): number[] {
    const binding = this.token(modelId);
    validateTokenIds(tokens, binding.capability.vocab_size);
    if (contextTokens) validateTokenIds(contextTokens, binding.capability.vocab_size);
    if (tokens.length >= binding.capability.max_context) {
      throw new ProtocolError('context_overflow', `${tokens.length} tokens exceed max_context`);
    }
    const causal = binding.capability.kind === 'causal';
    const minLen = causal ? 2 : 1;
    if (tokens.length < minLen) {
      throw new ProtocolError('sequence_too_short', `${binding.capability.kind} scoring needs >= ${minLen} tokens`);
    }
    if (causal) {
      // condition on the first token; BOS anchors the stream
      return binding.lm.scoreStream([BOS, tokens[0]], tokens.slice(1));
    }
    const prefix = this.stream(binding, [], contextTokens);
    return binding.lm.scoreStream(prefix, tokens);
  }

  tokenize(modelId: string, text: string): number[] {
    this.token(modelId);
    return tokenizeText(text);
  }

  detokenize(modelId: string, tokens: number[]): string {
    const binding = this.token(modelId);
    validateTokenIds(tokens, binding.capability.vocab_size);
    return detokenize(tokens);
  }

  inferClauses(modelId: string, text: string, relations: string[], count: number): Clause[] {
    if (!this.inferModels.has(modelId)) {
      if (this.tokenModels.has(modelId) || this.extractModels.has(modelId)) {
        throw new ProtocolError('unsupported_operation', `${modelId} does not serve inference requests`);
      }
      throw new ProtocolError('unknown_model', `no model named ${modelId}`);
    }
    if (relations.length === 0) {
      throw new ProtocolError('unsupported_relation', 'relations must be non-empty');
    }
    for (const r of relations) {
      if (!(RELATIONS as readonly string[]).includes(r)) {
        throw new ProtocolError('unsupported_relation', `relation ${r} is not served`);
      }
    }
    if (count < 0) throw new ProtocolError('bad_request', 'count must be >= 0');
    const words = contentWords(text);
    const pick = (i: number) => words[i % Math.max(words.length, 1)] ?? 'way';
    const out: Clause[] = [];
    for (const relation of relations as Clause['relation'][]) {
      const templates = relation === 'xIntent' ? INTENT_TEMPLATES : NEED_TEMPLATES;
      for (let i = 0; i < Math.min(count, templates.length); i++) {
        out.push({ relation, text: templates[i].replace('{}', pick(i)) });
      }
    }
    return out;
  }

  extractSpan(modelId: string, context: string, question: string): SpanResponse {
    if (!this.extractModels.has(modelId)) {
      if (this.tokenModels.has(modelId) || this.inferModels.has(modelId)) {
        throw new ProtocolError('unsupported_operation', `${modelId} does not serve extraction requests`);
      }
      throw new ProtocolError('unknown_model', `no model named ${modelId}`);
    }
    if (!context || !question) {
      throw new ProtocolError('empty_input', 'context and question must be non-empty');
    }
    const questionWords = new Set(
      (question.toLowerCase().match(/\p{L}+/gu) ?? []).filter((w) => !STOPWORDS.has(w)),
    );
    const re = /\p{Lu}\p{L}*/gu;
    let best: { answer: string; start: number; score: number } | null = null;
    let m: RegExpExecArray | null;
    while ((m = re.exec(context)) !== null) {
      const token = m[0];
      if (STOPWORDS.has(token.toLowerCase())) continue;
      // score: question-word overlap in a +-40 char neighborhood, earlier wins ties
      const windowText = context
        .slice(Math.max(0, m.index - 40), m.index + token.length + 40)
        .toLowerCase();
      let overlap = 0;
      for (const w of windowText.match(/\p{L}+/gu) ?? []) {
        if (questionWords.has(w)) overlap += 1;
      }
      const score = overlap - m.index / context.length;
      if (best === null || score > best.score) {
        best = { answer: token, start: m.index, score };
      }
    }
    if (best === null) {
      return { answer: '', start: 0, end: 0, confidence: 0.0 };
    }
    const confidence = Math.max(0.1, Math.min(1, (1 + best.score) / (1 + questionWords.size)));
    return {
      answer: best.answer,
      start: best.start,
      end: best.start + best.answer.length,
      confidence,
    };
  }
}

export function loadBindings(configPath: string): AdapterBackend {
  let raw: { bindings: BindingConfig[] };
  try {
    raw = JSON.parse(fs.readFileSync(configPath, 'utf-8'));
  } catch (err) {
    throw new Error(`cannot read bindings config ${configPath}: ${err}`);
  }
  return new AdapterBackend(raw.bindings, path.dirname(configPath));
}
