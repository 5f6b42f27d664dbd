/**
 * Server configuration: which models to wrap and how to drive generation.
 *
 * `maxInputTokens` must match the token_limit the pipeline advertises for
 * this backend; the server truncates every input to it with its own
 * tokenizer, so over-long inputs can never reach the model.
 */

export interface GenerationSettings {
  /** beam search hypothesis count */
  beams: number;
  /** maximum generated length in tokens */
  maxNewTokens: number;
  /** beam search length penalty */
  lengthPenalty: number;
}

export interface AdapterConfig {
  engine: 'deterministic' | 'transformersjs';
  summarizerModel: string;
  embedderModel: string;
  device: 'cpu' | 'gpu';
  maxInputTokens: number;
  generation: GenerationSettings;
  /** deterministic engine: sentences kept by the extractive summarizer */
  leadSentences: number;
  /** deterministic engine: embedding dimension */
  embeddingDim: number;
  /** deterministic engine: tokens-per-word counting ratio */
  tokensPerWord: number;
  port: number;
}

export const DEFAULT_CONFIG: AdapterConfig = {
  engine: 'deterministic',
  summarizerModel: 'Xenova/distilbart-cnn-6-6',
  embedderModel: 'Xenova/all-MiniLM-L6-v2',
  device: 'cpu',
  maxInputTokens: 1024,
  generation: { beams: 4, maxNewTokens: 512, lengthPenalty: 0.2 },
  leadSentences: 2,
  embeddingDim: 256,
  tokensPerWord: 1.6,
  port: 8787,
};

/** Parse `--key value` style CLI arguments over the defaults. */
export function configFromArgs(argv: string[]): AdapterConfig {
  const config = { ...DEFAULT_CONFIG, generation: { ...DEFAULT_CONFIG.generation } };
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`missing value for ${key}`);
    switch (key) {
      case '--engine':
        if (value !== 'deterministic' && value !== 'transformersjs') {
          throw new Error(`unknown engine '${value}'`);
        }
        config.engine = value;
        break;
      case '--summarizer-model':
        config.summarizerModel = value;
        break;
      case '--embedder-model':
        config.embedderModel = value;
        break;
      case '--max-input-tokens':
        config.maxInputTokens = parsePositiveInt(key, value);
        break;
      case '--max-new-tokens':
        config.generation.maxNewTokens = parsePositiveInt(key, value);
        break;
      case '--beams':
        config.generation.beams = parsePositiveInt(key, value);
        break;
      case '--length-penalty':
        config.generation.lengthPenalty = Number(value);
        break;
      case '--lead-sentences':
        config.leadSentences = parsePositiveInt(key, value);
        break;
      case '--port':
        config.port = parsePositiveInt(key, value);
        break;
      default:
        throw new Error(`unknown option ${key}`);
    }
  }
  return config;
}

function parsePositiveInt(key: string, value: string): number {
  const parsed = Number.parseInt(value, 10);
  if (!Number.isInteger(parsed) || parsed < 1) {
    throw new Error(`${key} must be a positive integer, got '${value}'`);
  }
  return parsed;
}
