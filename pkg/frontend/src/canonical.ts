/**
 * Canonical wire encoding shared with the host: keys sorted, compact
 * separators, raw UTF-8. Every reply line must survive a parse/re-encode
 * round trip byte-for-byte on the host side, so sorting follows Unicode
 * code points (not UTF-16 code units) to match its collation.
 */

function compareCodePoints(a: string, b: string): number {
    let i = 0;
    let j = 0;
    while (i < a.length && j < b.length) {
        const ca = a.codePointAt(i)!;
        const cb = b.codePointAt(j)!;
        if (ca !== cb) return ca - cb;
        i += ca > 0xffff ? 2 : 1;
        j += cb > 0xffff ? 2 : 1;
    }
    return a.length - i - (b.length - j);
}

export function canonicalJson(value: unknown): string {
    if (value === null || typeof value !== "object") {
        if (typeof value === "number" && !Number.isFinite(value)) {
            throw new Error(`non-finite number in protocol message: ${value}`);
        }
        return JSON.stringify(value);
    }
    if (Array.isArray(value)) {
        return "[" + value.map(canonicalJson).join(",") + "]";
    }
    const record = value as Record<string, unknown>;
    const keys = Object.keys(record).sort(compareCodePoints);
    const parts = keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(record[k]));
    return "{" + parts.join(",") + "}";
}

/** One protocol line: canonical JSON plus the terminating newline. */
export function encodeLine(message: unknown): string {
    return canonicalJson(message) + "\n";
}
