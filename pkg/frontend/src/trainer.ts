/**
 * Fine-tuning loop for the protocol's train command.
 *
 * Epoch semantics mirror the host's built-in classifier: after each epoch
 * the validation loss is compared with the previous epoch's, a strict
 * increase counts as a stopping event, training ends once patience_events
 * events accumulate (or the count, in consecutive mode, is reached without
 * a reset), and the weights of the lowest-validation-loss epoch win.
 */

import * as tf from "@tensorflow/tfjs";
import { TinyEncoder } from "./model";
import { encodeText, padBatch } from "./tokenizer";

export interface TrainExample {
    label: number;
    text: string;
}

export interface FineTuneConfig {
    maxTokens: number;
    maxEpochs: number;
    patienceEvents: number;
    patienceMode: "cumulative" | "consecutive";
    learningRate: number; // host-scale rate; Adam runs at 0.01x
    seed: number;
    batchSize: number;
}

export const FINE_TUNE_DEFAULTS: FineTuneConfig = {
    maxTokens: 512,
    maxEpochs: 200,
    patienceEvents: 3,
    patienceMode: "cumulative",
    learningRate: 0.1,
    seed: 0,
    batchSize: 16,
};

/** Host config dicts pass through opaquely; pick out the keys we honor. */
export function fineTuneConfigFrom(raw: Record<string, unknown>): FineTuneConfig {
    const config = { ...FINE_TUNE_DEFAULTS };
    if (typeof raw.max_tokens === "number") config.maxTokens = raw.max_tokens;
    if (typeof raw.max_epochs === "number") config.maxEpochs = raw.max_epochs;
    if (typeof raw.patience_events === "number") config.patienceEvents = raw.patience_events;
    if (raw.patience_mode === "consecutive") config.patienceMode = "consecutive";
    if (typeof raw.learning_rate === "number" && raw.learning_rate > 0) {
        config.learningRate = raw.learning_rate;
    }
    if (typeof raw.rng_seed === "number") config.seed = raw.rng_seed;
    return config;
}

export class EarlyStopping {
    epoch = 0;
    events = 0;
    bestEpoch = 0;
    bestLoss = Infinity;
    private prevLoss: number | null = null;

    constructor(private patienceEvents: number, private mode: "cumulative" | "consecutive") {}

    /** Record one epoch's validation loss; true means stop now. */
    update(valLoss: number): boolean {
        this.epoch += 1;
        if (this.prevLoss !== null && valLoss > this.prevLoss) {
            this.events += 1;
        } else if (this.mode === "consecutive") {
            this.events = 0;
        }
        this.prevLoss = valLoss;
        if (valLoss < this.bestLoss) {
            this.bestLoss = valLoss;
            this.bestEpoch = this.epoch;
        }
        return this.events >= this.patienceEvents;
    }
}

/** Deterministic PRNG for shuffling (mulberry32). */
export function rng(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
        state = (state + 0x6d2b79f5) >>> 0;
        let t = state;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

function shuffled<T>(items: T[], random: () => number): T[] {
    const copy = [...items];
    for (let i = copy.length - 1; i > 0; i--) {
        const j = Math.floor(random() * (i + 1));
        [copy[i], copy[j]] = [copy[j], copy[i]];
    }
    return copy;
}

interface Encoded {
    ids: number[];
    label: number;
}

function encodeExamples(examples: TrainExample[], config: FineTuneConfig, vocab: number): Encoded[] {
    return examples.map((ex) => ({
        ids: encodeText(ex.text, config.maxTokens, vocab),
        label: ex.label,
    }));
}

function batchLoss(model: TinyEncoder, batch: Encoded[]): tf.Scalar {
    const { ids, mask } = padBatch(batch.map((e) => e.ids));
    const logits = model.classLogits(tf.tensor2d(ids, undefined, "int32"), tf.tensor2d(mask));
    const labels = tf.oneHot(
        tf.tensor1d(batch.map((e) => e.label), "int32"),
        model.headSize
    );
    return tf.losses.softmaxCrossEntropy(labels, logits).asScalar();
}

export function meanLoss(model: TinyEncoder, examples: Encoded[]): number {
    return tf.tidy(() => batchLoss(model, examples).dataSync()[0]);
}

export interface FineTuneResult {
    epochsRun: number;
    bestEpoch: number;
    bestValLoss: number;
}

export function fineTune(
    model: TinyEncoder,
    candidates: string[],
    trainSet: TrainExample[],
    valSet: TrainExample[],
    config: FineTuneConfig
): FineTuneResult {
    const vocab = model.dims.vocab;
    const maxTokens = Math.min(config.maxTokens, model.dims.maxPositions);
    const encodedTrain = encodeExamples(trainSet, { ...config, maxTokens }, vocab);
    const encodedVal = encodeExamples(valSet, { ...config, maxTokens }, vocab);

    model.attachHead(candidates.length, config.seed + 7);
    const trainable = model.fineTuneVars();
    const optimizer = tf.train.adam(config.learningRate * 0.01);
    const stopper = new EarlyStopping(config.patienceEvents, config.patienceMode);
    const random = rng(config.seed + 1);

    let best = model.snapshot(trainable);
    for (let epoch = 0; epoch < config.maxEpochs; epoch++) {
        const order = shuffled(encodedTrain, random);
        for (let start = 0; start < order.length; start += config.batchSize) {
            const batch = order.slice(start, start + config.batchSize);
            optimizer.minimize(() => batchLoss(model, batch), false, trainable);
        }
        const valLoss = meanLoss(model, encodedVal);
        const isBest = valLoss < stopper.bestLoss;
        const stop = stopper.update(valLoss);
        if (isBest) {
            best.forEach((t) => t.dispose());
            best = model.snapshot(trainable);
        }
        if (stop) break;
    }
    model.restore(trainable, best);
    best.forEach((t) => t.dispose());
    optimizer.dispose();
    return { epochsRun: stopper.epoch, bestEpoch: stopper.bestEpoch, bestValLoss: stopper.bestLoss };
}

/** Softmax rows for a batch of texts, floored and renormalized so every
 * entry stays in the plain-decimal range that encodes identically across
 * JSON writers (tiny exponents do not). Argmax order is preserved. */
export function predictProbs(model: TinyEncoder, texts: string[], maxTokens: number): number[][] {
    const vocab = model.dims.vocab;
    const capped = Math.min(maxTokens, model.dims.maxPositions);
    const rows = texts.map((t) => encodeText(t, capped, vocab));
    const { ids, mask } = padBatch(rows);
    const probs = tf.tidy(() =>
        tf
            .softmax(model.classLogits(tf.tensor2d(ids, undefined, "int32"), tf.tensor2d(mask)), -1)
            .arraySync()
    ) as number[][];
    return probs.map((row) => {
        const floored = row.map((p) => (Number.isFinite(p) ? Math.max(p, 2e-4) : 1 / row.length));
        const total = floored.reduce((a, b) => a + b, 0);
        return floored.map((p) => p / total);
    });
}
