/**
 * Entry point. Two commands:
 *
 *   serve [--checkpoint file]            answer protocol v1 on stdio
 *   pretrain --out file [--steps n] [--seed n]   build a checkpoint
 *
 * Usage mistakes exit 1, matching the host CLI's convention.
 */

import { PRETRAIN_DEFAULTS, pretrain, saveCheckpoint } from "./pretrain";
import { serve } from "./server";

function fail(message: string): never {
    process.stderr.write(message + "\n");
    process.exit(1);
}

function argValue(args: string[], flag: string): string | undefined {
    const at = args.indexOf(flag);
    if (at === -1) return undefined;
    const value = args[at + 1];
    if (value === undefined || value.startsWith("--")) fail(`${flag} needs a value`);
    return value;
}

function positiveInt(raw: string, flag: string): number {
    const value = Number(raw);
    if (!Number.isInteger(value) || value <= 0) fail(`${flag} needs a positive integer, got ${raw}`);
    return value;
}

function main(): void {
    const [command, ...args] = process.argv.slice(2);
    if (command === "serve") {
        serve({ checkpoint: argValue(args, "--checkpoint") });
    } else if (command === "pretrain") {
        const out = argValue(args, "--out");
        if (!out) fail("pretrain needs --out");
        const options = { ...PRETRAIN_DEFAULTS };
        const steps = argValue(args, "--steps");
        if (steps) options.steps = positiveInt(steps, "--steps");
        const seed = argValue(args, "--seed");
        if (seed) options.seed = positiveInt(seed, "--seed");
        const model = pretrain(options, (line) => process.stderr.write(line + "\n"));
        saveCheckpoint(model, out);
        process.stderr.write(`checkpoint written to ${out}\n`);
    } else {
        fail("usage: main.js serve [--checkpoint file] | pretrain --out file [--steps n] [--seed n]");
    }
}

main();
