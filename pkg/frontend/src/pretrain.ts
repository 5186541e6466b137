/**
 * Local masked-token pretraining.
 *
 * No checkpoint is downloadable here, so `pretrain` builds one: it samples
 * a synthetic corpus with latent topic structure directly in the hashed id
 * space, masks 15% of the positions per sequence, and trains the encoder
 * to recover the original ids through the tied-embedding head. The result
 * is a deterministic JSON checkpoint that `serve` fine-tunes from.
 */

import * as tf from "@tensorflow/tfjs";
import * as fs from "fs";
import * as path from "path";
import { DEFAULT_DIMS, ModelDims, TinyEncoder } from "./model";
import { MASK_ID, RESERVED_IDS } from "./tokenizer";
import { rng } from "./trainer";

export interface PretrainOptions {
    steps: number;
    batchSize: number;
    seqLength: number;
    learningRate: number;
    seed: number;
    topics: number;
    dims: ModelDims;
}

export const PRETRAIN_DEFAULTS: PretrainOptions = {
    steps: 300,
    batchSize: 16,
    seqLength: 32,
    learningRate: 3e-3,
    seed: 1,
    topics: 40,
    dims: DEFAULT_DIMS,
};

interface TopicSampler {
    sample(): number[];
}

/** Each topic prefers a private slice of the vocabulary; sequences draw
 * 80% topic tokens, 20% background, so attention has structure to find. */
function topicSampler(options: PretrainOptions): TopicSampler {
    const random = rng(options.seed);
    const usable = options.dims.vocab - RESERVED_IDS;
    const poolSize = Math.max(8, Math.floor(usable / options.topics / 2));
    const pools: number[][] = [];
    for (let t = 0; t < options.topics; t++) {
        const pool: number[] = [];
        for (let i = 0; i < poolSize; i++) {
            pool.push(RESERVED_IDS + Math.floor(random() * usable));
        }
        pools.push(pool);
    }
    return {
        sample() {
            const pool = pools[Math.floor(random() * pools.length)];
            const ids: number[] = [];
            for (let i = 0; i < options.seqLength; i++) {
                if (random() < 0.8) {
                    ids.push(pool[Math.floor(random() * pool.length)]);
                } else {
                    ids.push(RESERVED_IDS + Math.floor(random() * usable));
                }
            }
            return ids;
        },
    };
}

function maskedStep(
    model: TinyEncoder,
    optimizer: tf.Optimizer,
    batch: number[][],
    random: () => number
): number {
    const seqLength = batch[0].length;
    const masked = batch.map((row) => [...row]);
    const targets: number[] = [];
    const positions: number[] = []; // flat [row * seqLength + col]
    batch.forEach((row, r) => {
        let maskedInRow = 0;
        row.forEach((id, c) => {
            if (random() < 0.15) {
                masked[r][c] = MASK_ID;
                targets.push(id);
                positions.push(r * seqLength + c);
                maskedInRow++;
            }
        });
        if (maskedInRow === 0) {
            // always learn from at least one position per sequence
            const c = Math.floor(random() * seqLength);
            targets.push(row[c]);
            positions.push(r * seqLength + c);
            masked[r][c] = MASK_ID;
        }
    });
    const loss = optimizer.minimize(
        () => {
            const ids = tf.tensor2d(masked, undefined, "int32");
            const mask = tf.onesLike(ids);
            const states = model.hiddenStates(ids, mask);
            const logits = model.tokenLogits(states, tf.tensor1d(positions, "int32"));
            const labels = tf.oneHot(tf.tensor1d(targets, "int32"), model.dims.vocab);
            return tf.losses.softmaxCrossEntropy(labels, logits).asScalar();
        },
        true,
        model.allVars()
    ) as tf.Scalar;
    const value = loss.dataSync()[0];
    loss.dispose();
    return value;
}

export function pretrain(options: PretrainOptions, log?: (line: string) => void): TinyEncoder {
    const model = new TinyEncoder(options.dims, options.seed);
    const sampler = topicSampler(options);
    const maskRandom = rng(options.seed + 2);
    const optimizer = tf.train.adam(options.learningRate);
    for (let step = 0; step < options.steps; step++) {
        const batch = Array.from({ length: options.batchSize }, () => sampler.sample());
        const loss = tf.tidy(() => maskedStep(model, optimizer, batch, maskRandom));
        if (log && (step % 50 === 0 || step === options.steps - 1)) {
            log(`pretrain step ${step}: masked-token loss ${loss.toFixed(4)}`);
        }
    }
    optimizer.dispose();
    return model;
}

export function saveCheckpoint(model: TinyEncoder, file: string): void {
    fs.mkdirSync(path.dirname(path.resolve(file)), { recursive: true });
    fs.writeFileSync(file, model.serialize());
}

export function loadCheckpoint(file: string): TinyEncoder {
    return TinyEncoder.deserialize(fs.readFileSync(file, "utf8"));
}
