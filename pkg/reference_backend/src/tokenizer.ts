/**
 * Word-ratio token accounting and input truncation.
 *
 * The deterministic engine has no subword vocabulary, so it counts
 * whitespace words scaled by a tokens-per-word ratio (rounded up), the
 * same budgeting convention the pipeline uses client-side.
 */

export function countTokens(text: string, tokensPerWord: number): number {
  const words = splitWords(text);
  return Math.ceil(words.length * tokensPerWord);
}

/**
 * Longest word-prefix whose token count fits the limit. Never splits a
 * word; returns '' when even the first word does not fit.
 */
export function truncateToTokens(text: string, limit: number, tokensPerWord: number): string {
  const words = splitWords(text);
  if (Math.ceil(words.length * tokensPerWord) <= limit) return words.join(' ');
  // counting is monotone in the word count, so invert it directly
  const keep = Math.floor(limit / tokensPerWord);
  return words.slice(0, keep).join(' ');
}

export function splitWords(text: string): string[] {
  return text.split(/\s+/).filter((w) => w.length > 0);
}
