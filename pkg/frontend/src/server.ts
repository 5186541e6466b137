/**
 * Protocol v1 server: line-delimited JSON over stdio.
 *
 * Handling mirrors the host's built-in plugin byte for byte: blank lines
 * are skipped; a malformed or non-object line is fatal (error reply, then
 * exit 3), as is a handshake for an unsupported protocol version; a bad
 * train or predict message gets an error reply and the loop keeps serving;
 * shutdown or EOF exits 0. Every reply is one canonical JSON line.
 */

import * as readline from "readline";
import { encodeLine } from "./canonical";
import { DEFAULT_DIMS, TinyEncoder } from "./model";
import {
    FINE_TUNE_DEFAULTS,
    TrainExample,
    fineTune,
    fineTuneConfigFrom,
    predictProbs,
} from "./trainer";
import { loadCheckpoint } from "./pretrain";

export const SERVER_NAME = "lyristics-transformer";
export const PROTOCOL_VERSION = 1;

export interface ServeOptions {
    checkpoint?: string;
}

/** Train-message defects that deserve an error reply instead of a crash. */
class BadMessage extends Error {}

function examplesFrom(value: unknown, field: string, classes: number): TrainExample[] {
    if (!Array.isArray(value) || value.length === 0) {
        throw new BadMessage(`bad train message: ${field} must be a non-empty list`);
    }
    return value.map((item) => {
        const pair = (item ?? {}) as Record<string, unknown>;
        const { label, text } = pair;
        if (typeof text !== "string" || typeof label !== "number" || !Number.isInteger(label)) {
            throw new BadMessage(`bad train message: ${field} entries need a text and an integer label`);
        }
        if (label < 0 || label >= classes) {
            throw new BadMessage(`bad train message: label ${label} outside ${classes} candidates`);
        }
        return { label, text };
    });
}

/** Checkpoint weights as JSON, falling back to fresh random weights so the
 * protocol surface works (and stays testable) without any file on disk. */
function baseWeights(options: ServeOptions): string {
    let model: TinyEncoder;
    if (options.checkpoint) {
        model = loadCheckpoint(options.checkpoint);
    } else {
        process.stderr.write("no checkpoint given; starting from random weights\n");
        model = new TinyEncoder(DEFAULT_DIMS, 11);
    }
    const json = model.serialize();
    model.allVars().forEach((v) => v.dispose());
    return json;
}

export function serve(options: ServeOptions): void {
    const baseJson = baseWeights(options);
    let model: TinyEncoder | null = null;
    let predictTokens = FINE_TUNE_DEFAULTS.maxTokens;
    let finished = false;

    const emit = (message: unknown) => process.stdout.write(encodeLine(message));
    const rl = readline.createInterface({ input: process.stdin, terminal: false });
    const finish = (code: number) => {
        finished = true;
        process.exitCode = code;
        rl.close();
        process.stdin.destroy();
        // normal exit happens once stdout drains; the unref'd timer only
        // fires if some stray handle keeps the loop alive
        setTimeout(() => process.exit(code), 500).unref();
    };

    rl.on("line", (line) => {
        if (finished || !line.trim()) return;
        let parsed: unknown;
        try {
            parsed = JSON.parse(line);
        } catch {
            emit({ ok: false, error: "malformed JSON line" });
            finish(3);
            return;
        }
        if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
            emit({ ok: false, error: "message is not a JSON object" });
            finish(3);
            return;
        }
        const request = parsed as Record<string, unknown>;
        const cmd = request.cmd;
        if (cmd === "handshake") {
            if (request.protocol !== PROTOCOL_VERSION) {
                emit({ ok: false, error: `unsupported protocol ${JSON.stringify(request.protocol)}` });
                finish(3);
                return;
            }
            emit({ name: SERVER_NAME, ok: true });
        } else if (cmd === "train") {
            let trainSet: TrainExample[];
            let valSet: TrainExample[];
            let candidates: unknown[];
            try {
                if (!Array.isArray(request.candidates) || request.candidates.length === 0) {
                    throw new BadMessage("bad train message: candidates must be a non-empty list");
                }
                candidates = request.candidates;
                trainSet = examplesFrom(request.train, "train", candidates.length);
                valSet = examplesFrom(request.val, "val", candidates.length);
            } catch (exc) {
                emit({ ok: false, error: exc instanceof BadMessage ? exc.message : String(exc) });
                return;
            }
            const config = fineTuneConfigFrom((request.config ?? {}) as Record<string, unknown>);
            // only swap the served model in once training succeeds, so a
            // failed retrain leaves the previous model answering predicts
            const fresh = TinyEncoder.deserialize(baseJson);
            try {
                fineTune(fresh, candidates.map(String), trainSet, valSet, config);
            } catch (exc) {
                fresh.allVars().forEach((v) => v.dispose());
                emit({ ok: false, error: `train failed: ${String(exc)}` });
                return;
            }
            if (model) model.allVars().forEach((v) => v.dispose());
            model = fresh;
            predictTokens = config.maxTokens;
            emit({ ok: true });
        } else if (cmd === "predict") {
            if (!model) {
                emit({ ok: false, error: "predict before train" });
                return;
            }
            const texts = request.texts;
            if (!Array.isArray(texts) || texts.some((t) => typeof t !== "string")) {
                emit({ ok: false, error: "predict needs a list of texts" });
                return;
            }
            const probs = texts.length === 0 ? [] : predictProbs(model, texts as string[], predictTokens);
            emit({ ok: true, probs });
        } else if (cmd === "shutdown") {
            finish(0);
        } else {
            emit({ ok: false, error: `unknown cmd ${JSON.stringify(cmd)}` });
        }
    });
    rl.on("close", () => {
        if (!finished) finish(0);
    });
}
