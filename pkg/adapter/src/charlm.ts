/**
 * Byte-level interpolated n-gram language model.
 *
 * Small enough to train in milliseconds and ship as a JSON checkpoint,
 * but a real statistical model: probabilities come from corpus counts
 * with additive smoothing, interpolated across orders, and they sum to 1
 * over the vocabulary, so /v1/score values are genuine log-probabilities.
 *
 * Token space matches the byte tokenizer used across the project:
 * ids 0..255 are UTF-8 bytes, 256 is end-of-sequence, 257 begin-of-sequence.
 */

export const VOCAB_SIZE = 258;
export const EOS = 256;
export const BOS = 257;

const ALPHA = 0.5; // additive smoothing
const LAMBDAS = [0.2, 0.3, 0.5]; // unigram, bigram, trigram weights

export interface Checkpoint {
  format: 'charlm-ngram';
  order: number;
  vocab_size: number;
  /** "c1,c2" (context joined) -> { token -> count }; "" is the unigram row */
  counts: Record<string, Record<string, number>>;
  totals: Record<string, number>;
  trained_on: string[];
}

export function tokenizeText(text: string): number[] {
  return Array.from(Buffer.from(text, 'utf-8'));
}

export function detokenize(tokens: number[]): string {
  return Buffer.from(tokens.filter((t) => t < 256)).toString('utf-8');
}

export function trainCheckpoint(documents: { name: string; text: string }[], order = 3): Checkpoint {
  const counts: Record<string, Record<string, number>> = {};
  const totals: Record<string, number> = {};
  const bump = (ctx: string, token: number) => {
    const row = (counts[ctx] ??= {});
    row[token] = (row[token] ?? 0) + 1;
    totals[ctx] = (totals[ctx] ?? 0) + 1;
  };
  for (const doc of documents) {
    const stream = [BOS, ...tokenizeText(doc.text), EOS];
    for (let i = 1; i < stream.length; i++) {
      for (let k = 0; k < order; k++) {
        const ctx = stream.slice(Math.max(0, i - k), i).join(',');
        if (k === 0 || i - k >= 0) bump(ctx, stream[i]);
      }
    }
  }
  return {
    format: 'charlm-ngram',
    order,
    vocab_size: VOCAB_SIZE,
    counts,
    totals,
    trained_on: documents.map((d) => d.name),
  };
}

export class CharLm {
  constructor(private readonly ckpt: Checkpoint) {
    if (ckpt.format !== 'charlm-ngram') {
      throw new Error(`unsupported checkpoint format: ${ckpt.format}`);
    }
  }

  get order(): number {
    return this.ckpt.order;
  }

  private orderProb(ctx: number[], token: number): number {
    const key = ctx.join(',');
    const row = this.ckpt.counts[key];
    const total = this.ckpt.totals[key] ?? 0;
    const count = row?.[token] ?? 0;
    return (count + ALPHA) / (total + ALPHA * VOCAB_SIZE);
  }

  /** P(token | context), interpolated over all orders; sums to 1 over the vocab. */
  prob(context: number[], token: number): number {
    let p = 0;
    for (let k = 0; k < this.ckpt.order; k++) {
      const ctx = k === 0 ? [] : context.slice(-k);
      p += LAMBDAS[Math.min(k, LAMBDAS.length - 1)] * this.orderProb(ctx, token);
    }
    return p;
  }

  /** Natural-log probabilities for every vocab id given the context. */
  logitRow(context: number[]): Float64Array {
    const row = new Float64Array(VOCAB_SIZE);
    for (let t = 0; t < VOCAB_SIZE; t++) {
      row[t] = Math.log(this.prob(context, t));
    }
    return row;
  }

  /** Per-token conditional log-probabilities of a stream (given its prefix). */
  scoreStream(prefix: number[], tokens: number[]): number[] {
    const out: number[] = [];
    const stream = [...prefix];
    for (const token of tokens) {
      out.push(Math.log(this.prob(stream, token)));
      stream.push(token);
    }
    return out;
  }
}
