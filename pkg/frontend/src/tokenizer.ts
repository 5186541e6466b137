/**
 * Whitespace tokenizer with a fixed hashed vocabulary.
 *
 * Token strings are mapped to ids with FNV-1a over their UTF-8 bytes, so
 * the pretraining id space and any later fine-tuning corpus agree without
 * a stored vocabulary file. Ids 0 and 1 are reserved for padding and the
 * mask token.
 */

export const PAD_ID = 0;
export const MASK_ID = 1;
export const RESERVED_IDS = 2;

export function hashToken(token: string, vocabSize: number): number {
    const bytes = Buffer.from(token, "utf8");
    let h = 0x811c9dc5;
    for (const b of bytes) {
        h ^= b;
        h = Math.imul(h, 0x01000193) >>> 0;
    }
    return RESERVED_IDS + (h % (vocabSize - RESERVED_IDS));
}

/** First maxTokens whitespace tokens, hashed into [2, vocabSize). */
export function encodeText(text: string, maxTokens: number, vocabSize: number): number[] {
    const tokens = text.split(/\s+/).filter((t) => t.length > 0).slice(0, maxTokens);
    return tokens.map((t) => hashToken(t, vocabSize));
}

/** Pad a batch of id rows to a shared length; returns ids and a 0/1 mask. */
export function padBatch(rows: number[][]): { ids: number[][]; mask: number[][]; length: number } {
    const length = Math.max(1, ...rows.map((r) => r.length));
    const ids = rows.map((r) => [...r, ...Array(length - r.length).fill(PAD_ID)]);
    const mask = rows.map((r) => [
        ...Array(r.length).fill(1),
        ...Array(length - r.length).fill(0),
    ]);
    return { ids, mask, length };
}
