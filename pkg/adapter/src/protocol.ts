/**
 * Wire-protocol types and the error shape shared by every endpoint.
 * Numbers are IEEE-754 doubles; token ids are unsigned 32-bit integers.
 */

export type ModelKind = 'causal' | 'seq2seq' | 'extractive';

export interface ModelCapability {
  model_id: string;
  vocab_size: number;
  kind: ModelKind;
  max_context: number;
  eos_token_id: number | null;
}

export interface LogitsResponse {
  entries: [number, number][]; // sorted by token id
  complete: boolean;
}

export interface ScoreResponse {
  logprobs: number[];
}

export interface Clause {
  relation: 'xIntent' | 'xNeed';
  text: string;
}

export interface SpanResponse {
  answer: string;
  start: number;
  end: number;
  confidence: number;
}

/** Protocol failure carrying the machine-readable error type. */
export class ProtocolError extends Error {
  constructor(
    public readonly kind: string,
    message: string,
  ) {
    super(message);
  }

  get status(): number {
    return this.kind === 'unknown_model' || this.kind === 'not_found' ? 404 : 400;
  }
}

export const RELATIONS = ['xIntent', 'xNeed'] as const;

export function validateTokenIds(tokens: number[], vocabSize: number): void {
  for (const t of tokens) {
    if (!Number.isInteger(t) || t < 0 || t >= vocabSize) {
      throw new ProtocolError('invalid_token', `token id ${t} outside vocab of size ${vocabSize}`);
    }
  }
}
