/**
 * transformers.js adapter: real seq2seq generation and sentence embeddings
 * behind the same Engine interface.
 *
 * The package is loaded dynamically and is not a dependency of this
 * project; install it (and have the model weights reachable or cached)
 * before selecting `--engine transformersjs`:
 *
 *   npm install @xenova/transformers
 *   node dist/main.js --engine transformersjs --summarizer-model Xenova/distilbart-cnn-6-6
 *
 * Inputs are truncated with the summarizer's own tokenizer, so whatever
 * the pipeline sends is guaranteed to fit the model.
 */

import type { AdapterConfig } from './config.js';
import type { Engine } from './engine.js';

type SummarizationPipeline = any;
type EmbeddingPipeline = any;

export class TransformersJsEngine implements Engine {
  readonly name = 'transformersjs';

  private constructor(
    private readonly summarizer: SummarizationPipeline,
    private readonly embedder: EmbeddingPipeline,
    private readonly config: AdapterConfig,
  ) {}

  static async create(config: AdapterConfig): Promise<TransformersJsEngine> {
    let transformers: any;
    try {
      // variable specifier: the package is optional and may be absent at build time
      const moduleName = '@xenova/transformers';
      transformers = await import(moduleName);
    } catch (cause) {
      throw new Error(
        '@xenova/transformers is not installed; run `npm install @xenova/transformers` ' +
          'or start with --engine deterministic',
        { cause },
      );
    }
    try {
      const summarizer = await transformers.pipeline('summarization', config.summarizerModel);
      const embedder = await transformers.pipeline('feature-extraction', config.embedderModel);
      return new TransformersJsEngine(summarizer, embedder, config);
    } catch (cause) {
      throw new Error(
        `failed to load models '${config.summarizerModel}' / '${config.embedderModel}'`,
        { cause },
      );
    }
  }

  async summarize(input: string, maxNewTokens: number, prefix?: string): Promise<string> {
    const bounded = this.truncate(input, this.config.maxInputTokens);
    const output = await this.summarizer(bounded, {
      max_new_tokens: Math.min(maxNewTokens, this.config.generation.maxNewTokens),
      num_beams: this.config.generation.beams,
      length_penalty: this.config.generation.lengthPenalty,
    });
    const summary: string = output[0]?.summary_text ?? '';
    return prefix ? `${prefix} ${summary}`.trim() : summary;
  }

  async embed(texts: string[]): Promise<number[][]> {
    const vectors: number[][] = [];
    for (const text of texts) {
      const tensor = await this.embedder(text, { pooling: 'mean', normalize: true });
      vectors.push(Array.from(tensor.data as Float32Array));
    }
    return vectors;
  }

  countTokens(text: string): number {
    const tokenizer = this.summarizer.tokenizer;
    return tokenizer.encode(text).length;
  }

  truncate(text: string, maxTokens: number): string {
    const tokenizer = this.summarizer.tokenizer;
    const ids: number[] = tokenizer.encode(text);
    if (ids.length <= maxTokens) return text;
    return tokenizer.decode(ids.slice(0, maxTokens), { skip_special_tokens: true });
  }
}
