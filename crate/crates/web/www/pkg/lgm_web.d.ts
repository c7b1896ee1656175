/* tslint:disable */
/* eslint-disable */

export class AugmentDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * The parameters of the last sample, as text.
     */
    describe(): string;
    /**
     * One toy shape image (`size x size`) chosen by `seed`.
     */
    constructor(seed: number, size: number);
    /**
     * Draws fresh parameters and returns the augmented image (clamped by quantization).
     */
    sample(flip: boolean, crop: boolean, noise: boolean, noise_std: number): Uint8Array;
    size(): number;
    source_rgba(): Uint8Array;
}

export class PyramidDemo {
    free(): void;
    [Symbol.dispose](): void;
    active_count(): number;
    level_count(): number;
    /**
     * Fresh `N(0, 1)` pyramid with only the 1x1 level active.
     */
    constructor(seed: number, resolution: number);
    resolution(): number;
    rgba(): Uint8Array;
    set_active(n: number): void;
}

export class VectorDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Share of real points whose most cosine-similar synthetic point has their class.
     */
    accuracy(): number;
    classes(): number;
    iteration(): number;
    constructor(seed: number, sigma: number, per_class: number);
    /**
     * Synthetic points as `[x0, y0, x1, y1, ...]`, one per class.
     */
    points(): Float64Array;
    real_labels(): Uint32Array;
    real_points(): Float64Array;
    step(n: number): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_augmentdemo_free: (a: number, b: number) => void;
    readonly __wbg_pyramiddemo_free: (a: number, b: number) => void;
    readonly __wbg_vectordemo_free: (a: number, b: number) => void;
    readonly augmentdemo_describe: (a: number) => [number, number];
    readonly augmentdemo_new: (a: number, b: number) => [number, number, number];
    readonly augmentdemo_sample: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly augmentdemo_size: (a: number) => number;
    readonly augmentdemo_source_rgba: (a: number) => [number, number];
    readonly pyramiddemo_active_count: (a: number) => number;
    readonly pyramiddemo_level_count: (a: number) => number;
    readonly pyramiddemo_new: (a: number, b: number) => [number, number, number];
    readonly pyramiddemo_resolution: (a: number) => number;
    readonly pyramiddemo_rgba: (a: number) => [number, number, number, number];
    readonly pyramiddemo_set_active: (a: number, b: number) => [number, number];
    readonly vectordemo_accuracy: (a: number) => number;
    readonly vectordemo_classes: (a: number) => number;
    readonly vectordemo_iteration: (a: number) => number;
    readonly vectordemo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly vectordemo_points: (a: number) => [number, number];
    readonly vectordemo_real_labels: (a: number) => [number, number];
    readonly vectordemo_real_points: (a: number) => [number, number];
    readonly vectordemo_step: (a: number, b: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
