/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_augmentdemo_free: (a: number, b: number) => void;
export const __wbg_pyramiddemo_free: (a: number, b: number) => void;
export const __wbg_vectordemo_free: (a: number, b: number) => void;
export const augmentdemo_describe: (a: number) => [number, number];
export const augmentdemo_new: (a: number, b: number) => [number, number, number];
export const augmentdemo_sample: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const augmentdemo_size: (a: number) => number;
export const augmentdemo_source_rgba: (a: number) => [number, number];
export const pyramiddemo_active_count: (a: number) => number;
export const pyramiddemo_level_count: (a: number) => number;
export const pyramiddemo_new: (a: number, b: number) => [number, number, number];
export const pyramiddemo_resolution: (a: number) => number;
export const pyramiddemo_rgba: (a: number) => [number, number, number, number];
export const pyramiddemo_set_active: (a: number, b: number) => [number, number];
export const vectordemo_accuracy: (a: number) => number;
export const vectordemo_classes: (a: number) => number;
export const vectordemo_iteration: (a: number) => number;
export const vectordemo_new: (a: number, b: number, c: number) => [number, number, number];
export const vectordemo_points: (a: number) => [number, number];
export const vectordemo_real_labels: (a: number) => [number, number];
export const vectordemo_real_points: (a: number) => [number, number];
export const vectordemo_step: (a: number, b: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
