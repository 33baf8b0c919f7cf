/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const memory_sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const run_lyapunov_laplacian: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const run_sylvester_convdiff: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
