/* tslint:disable */
/* eslint-disable */

/**
 * A system with its measure, built from `{"system": ..., "potential": ...}`
 * in the CLI config format.
 */
export class Model {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Certified `[lower, upper]` of `μ(B(x, r))` for each radius, flattened.
     */
    ball_curve(x: number, y: number, radii: Float64Array): Float64Array;
    dim(): number;
    constructor(json: string);
    /**
     * Modified recurrence with `ψ(n) = n^{-beta}` for one sample orbit:
     * `[N, count / Σψ]` pairs at `steps` evenly spaced checkpoints.
     */
    recurrence_ratio(n: number, steps: number, beta: number, seed: bigint): Float64Array;
    /**
     * `count` μ-random points, flattened as `[x0, (y0,) x1, ...]`.
     */
    sample_points(count: number, seed: bigint): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_model_free: (a: number, b: number) => void;
    readonly model_ball_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly model_dim: (a: number) => number;
    readonly model_new: (a: number, b: number) => [number, number, number];
    readonly model_recurrence_ratio: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly model_sample_points: (a: number, b: number, c: bigint) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
