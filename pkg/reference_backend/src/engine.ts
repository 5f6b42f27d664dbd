/**
 * Model engines behind the wire protocol.
 *
 * The deterministic engine needs no downloads and answers instantly: an
 * extractive lead-k summarizer plus a feature-hashed bag-of-words
 * embedder. It exists so the protocol surface (and the pipeline driving
 * it) can be exercised and tested on any machine; swap in the
 * transformers.js engine for real neural generation.
 */

import { createHash } from 'node:crypto';

import type { AdapterConfig } from './config.js';
import { countTokens, splitWords, truncateToTokens } from './tokenizer.js';

export interface Engine {
  readonly name: string;
  /** Summarize one already-truncated input. */
  summarize(input: string, maxNewTokens: number, prefix?: string): Promise<string>;
  /** Embed texts into fixed-dimension vectors. */
  embed(texts: string[]): Promise<number[][]>;
  /** Token count under this engine's own tokenizer. */
  countTokens(text: string): number;
  /** Truncate to the engine's token budget; result always fits. */
  truncate(text: string, maxTokens: number): string;
}

const ROLE_TAGS = new Set(['[doctor]', '[patient]', '[other]']);
const SENTENCE_BOUNDARY = /[.!?](?=\s+[A-Z0-9])/g;

/** Drop role tags and ellipsis markers, keeping the spoken words. */
export function stripMarkup(text: string): string {
  return splitWords(text)
    .filter((w) => !ROLE_TAGS.has(w) && w !== '...')
    .join(' ');
}

export function splitSentences(text: string): string[] {
  const collapsed = splitWords(text).join(' ');
  if (collapsed.length === 0) return [];
  const sentences: string[] = [];
  let start = 0;
  for (const match of collapsed.matchAll(SENTENCE_BOUNDARY)) {
    const end = (match.index ?? 0) + 1;
    sentences.push(collapsed.slice(start, end));
    start = end + 1;
  }
  if (start < collapsed.length) sentences.push(collapsed.slice(start));
  return sentences;
}

export class DeterministicEngine implements Engine {
  readonly name = 'deterministic';

  constructor(
    private readonly leadSentences: number,
    private readonly embeddingDim: number,
    private readonly tokensPerWord: number,
  ) {}

  async summarize(input: string, maxNewTokens: number, prefix?: string): Promise<string> {
    const body = stripMarkup(input);
    let summary = splitSentences(body).slice(0, this.leadSentences).join(' ');
    if (prefix) summary = `${prefix} ${summary}`.trim();
    // respect the generation length budget like a real decoder would
    return truncateToTokens(summary, maxNewTokens, this.tokensPerWord);
  }

  async embed(texts: string[]): Promise<number[][]> {
    return texts.map((text) => this.embedOne(text));
  }

  countTokens(text: string): number {
    return countTokens(text, this.tokensPerWord);
  }

  truncate(text: string, maxTokens: number): string {
    return truncateToTokens(text, maxTokens, this.tokensPerWord);
  }

  private embedOne(text: string): number[] {
    const vector = new Array<number>(this.embeddingDim).fill(0);
    const tokens = text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
    for (const token of tokens) {
      const digest = createHash('blake2b512').update(token).digest();
      const value = digest.readBigUInt64BE(0);
      const sign = (value & 1n) === 1n ? 1 : -1;
      const index = Number((value >> 1n) % BigInt(this.embeddingDim));
      vector[index] += sign;
    }
    return vector;
  }
}

/** Build the configured engine; model-loading problems reject at startup. */
export async function createEngine(config: AdapterConfig): Promise<Engine> {
  if (config.engine === 'deterministic') {
    return new DeterministicEngine(config.leadSentences, config.embeddingDim, config.tokensPerWord);
  }
  const { TransformersJsEngine } = await import('./transformersjs.js');
  return TransformersJsEngine.create(config);
}
