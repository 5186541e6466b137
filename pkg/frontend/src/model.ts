/**
 * Small transformer encoder over the hashed vocabulary.
 *
 * Pre-LN blocks (attention + feed-forward with residuals), a final layer
 * norm, and two output paths: masked-token logits through the tied input
 * embedding (pretraining) and a mean-pooled classification head attached
 * at fine-tuning time. All weights are explicit tf.Variables so the
 * fine-tuning step can freeze everything except the last block and head.
 */

import * as tf from "@tensorflow/tfjs";

export interface ModelDims {
    vocab: number;
    maxPositions: number;
    dModel: number;
    heads: number;
    blocks: number;
    ffn: number;
}

export const DEFAULT_DIMS: ModelDims = {
    vocab: 2048,
    maxPositions: 512,
    dModel: 32,
    heads: 2,
    blocks: 2,
    ffn: 64,
};

const EPS = 1e-5;

/** Row lookup with a scatter-add gradient. The stock gather gradient walks
 * every table row per backward pass, which dwarfs the rest of the step on
 * the pure-JS backend; scatterND accumulates duplicate ids in O(picks). */
function gatherRows(table: tf.Tensor, flatIds: tf.Tensor): tf.Tensor {
    const lookup = tf.customGrad((...args) => {
        const rows = args[0] as tf.Tensor;
        const save = args[1] as tf.GradSaveFunc;
        const shape = rows.shape as [number, number];
        save([flatIds]); // keep ids alive for the backward pass
        return {
            value: rows.gather(flatIds),
            gradFunc: (dy, saved) =>
                tf.scatterND(
                    (saved as tf.Tensor[])[0].expandDims(1),
                    dy as tf.Tensor,
                    shape
                ) as tf.Tensor,
        };
    });
    return lookup(table);
}

export class TinyEncoder {
    dims: ModelDims;
    vars: Map<string, tf.Variable>;
    headSize = 0; // classes; 0 until attachHead

    constructor(dims: ModelDims, seed: number) {
        this.dims = dims;
        this.vars = new Map();
        const init = (name: string, shape: number[], stddev: number) => {
            const v = tf.variable(tf.randomNormal(shape, 0, stddev, "float32", seed + this.vars.size));
            this.vars.set(name, v);
        };
        const ones = (name: string, shape: number[]) => {
            this.vars.set(name, tf.variable(tf.ones(shape)));
        };
        const zeros = (name: string, shape: number[]) => {
            this.vars.set(name, tf.variable(tf.zeros(shape)));
        };
        const d = dims.dModel;
        init("emb", [dims.vocab, d], 0.02);
        init("pos", [dims.maxPositions, d], 0.02);
        for (let b = 0; b < dims.blocks; b++) {
            ones(`b${b}_ln1_g`, [d]);
            zeros(`b${b}_ln1_b`, [d]);
            init(`b${b}_wq`, [d, d], 0.02);
            init(`b${b}_wk`, [d, d], 0.02);
            init(`b${b}_wv`, [d, d], 0.02);
            init(`b${b}_wo`, [d, d], 0.02);
            ones(`b${b}_ln2_g`, [d]);
            zeros(`b${b}_ln2_b`, [d]);
            init(`b${b}_ff1`, [d, dims.ffn], 0.02);
            zeros(`b${b}_ff1b`, [dims.ffn]);
            init(`b${b}_ff2`, [dims.ffn, d], 0.02);
            zeros(`b${b}_ff2b`, [d]);
        }
        ones("lnf_g", [d]);
        zeros("lnf_b", [d]);
        zeros("lm_bias", [dims.vocab]);
    }

    v(name: string): tf.Variable {
        const variable = this.vars.get(name);
        if (!variable) throw new Error(`no variable ${name}`);
        return variable;
    }

    private layerNorm(x: tf.Tensor, gain: tf.Variable, bias: tf.Variable): tf.Tensor {
        const { mean, variance } = tf.moments(x, -1, true);
        return x.sub(mean).div(variance.add(EPS).sqrt()).mul(gain).add(bias);
    }

    /** [batch, length, in] x [in, out]; flattened because the broadcast
     * 3D-by-2D matMul gradient misshapes the 2D operand's gradient. */
    private dense(x: tf.Tensor, weight: tf.Variable): tf.Tensor {
        const [batch, length, width] = x.shape as number[];
        const out = (weight.shape as number[])[1];
        return x.reshape([batch * length, width]).matMul(weight).reshape([batch, length, out]);
    }

    private attention(x: tf.Tensor, block: number, mask: tf.Tensor): tf.Tensor {
        const { dModel, heads } = this.dims;
        const headDim = dModel / heads;
        const [batch, length] = x.shape as number[];
        const split = (t: tf.Tensor) =>
            t.reshape([batch, length, heads, headDim]).transpose([0, 2, 1, 3]);
        const q = split(this.dense(x, this.v(`b${block}_wq`)));
        const k = split(this.dense(x, this.v(`b${block}_wk`)));
        const valueHeads = split(this.dense(x, this.v(`b${block}_wv`)));
        let scores = q.matMul(k, false, true).div(Math.sqrt(headDim));
        // keys at padded positions get a large negative score pre-softmax
        const keyMask = mask.reshape([batch, 1, 1, length]);
        scores = scores.add(keyMask.sub(1).mul(1e9));
        const context = tf.softmax(scores, -1).matMul(valueHeads);
        const merged = context.transpose([0, 2, 1, 3]).reshape([batch, length, dModel]);
        return this.dense(merged, this.v(`b${block}_wo`));
    }

    /** Hidden states [batch, length, dModel]; mask is 0/1 [batch, length]. */
    hiddenStates(ids: tf.Tensor, mask: tf.Tensor): tf.Tensor {
        const [batch, length] = ids.shape as number[];
        const flat = gatherRows(this.v("emb"), ids.cast("int32").reshape([-1]));
        const emb = flat.reshape([batch, length, this.dims.dModel]);
        const pos = this.v("pos").slice([0, 0], [length, this.dims.dModel]);
        let x = emb.add(pos.expandDims(0));
        const maskF = mask.cast("float32");
        for (let b = 0; b < this.dims.blocks; b++) {
            const normed1 = this.layerNorm(x, this.v(`b${b}_ln1_g`), this.v(`b${b}_ln1_b`));
            x = x.add(this.attention(normed1, b, maskF));
            const normed2 = this.layerNorm(x, this.v(`b${b}_ln2_g`), this.v(`b${b}_ln2_b`));
            const ff = this.dense(
                this.dense(normed2, this.v(`b${b}_ff1`)).add(this.v(`b${b}_ff1b`)).relu(),
                this.v(`b${b}_ff2`)
            ).add(this.v(`b${b}_ff2b`));
            x = x.add(ff);
        }
        return this.layerNorm(x, this.v("lnf_g"), this.v("lnf_b"));
    }

    /** Token logits [n, vocab] for selected positions, via the tied
     * embedding. `positions` indexes into the flattened [batch * length]
     * axis; projecting only the masked slots keeps the vocab-sized matmul
     * off the full sequence. */
    tokenLogits(states: tf.Tensor, positions: tf.Tensor): tf.Tensor {
        const { dModel } = this.dims;
        const picked = gatherRows(states.reshape([-1, dModel]), positions);
        return picked.matMul(this.v("emb"), false, true).add(this.v("lm_bias"));
    }

    /** Mean over non-pad positions; all-pad rows pool to zeros. */
    pool(states: tf.Tensor, mask: tf.Tensor): tf.Tensor {
        const maskF = mask.cast("float32").expandDims(-1);
        const summed = states.mul(maskF).sum(1);
        const counts = maskF.sum(1).maximum(1);
        return summed.div(counts);
    }

    attachHead(classes: number, seed: number): void {
        this.headSize = classes;
        this.vars.set(
            "head_w",
            tf.variable(tf.randomNormal([this.dims.dModel, classes], 0, 0.02, "float32", seed))
        );
        this.vars.set("head_b", tf.variable(tf.zeros([classes])));
    }

    classLogits(ids: tf.Tensor, mask: tf.Tensor): tf.Tensor {
        if (this.headSize === 0) throw new Error("classification head not attached");
        const pooled = this.pool(this.hiddenStates(ids, mask), mask);
        return pooled.matMul(this.v("head_w")).add(this.v("head_b"));
    }

    /** Trainable set for fine-tuning: last block, final norm, and head. */
    fineTuneVars(): tf.Variable[] {
        const last = this.dims.blocks - 1;
        const names = [...this.vars.keys()].filter(
            (n) => n.startsWith(`b${last}_`) || n.startsWith("lnf_") || n.startsWith("head_")
        );
        return names.map((n) => this.v(n));
    }

    allVars(): tf.Variable[] {
        return [...this.vars.values()];
    }

    snapshot(variables: tf.Variable[]): tf.Tensor[] {
        return variables.map((v) => v.clone());
    }

    restore(variables: tf.Variable[], saved: tf.Tensor[]): void {
        variables.forEach((v, i) => v.assign(saved[i]));
    }

    serialize(): string {
        const payload: Record<string, unknown> = { dims: this.dims, weights: {} };
        const weights = payload.weights as Record<string, { shape: number[]; data: number[] }>;
        for (const [name, variable] of this.vars) {
            if (name.startsWith("head_")) continue; // head belongs to a dataset, not the checkpoint
            weights[name] = {
                shape: variable.shape as number[],
                data: Array.from(variable.dataSync()),
            };
        }
        return JSON.stringify(payload);
    }

    static deserialize(text: string): TinyEncoder {
        const payload = JSON.parse(text) as {
            dims: ModelDims;
            weights: Record<string, { shape: number[]; data: number[] }>;
        };
        const model = new TinyEncoder(payload.dims, 0);
        for (const [name, entry] of Object.entries(payload.weights)) {
            model.v(name).assign(tf.tensor(entry.data, entry.shape as number[], "float32"));
        }
        return model;
    }
}
