/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const ppa_forecasts: (a: number) => [number, number];
export const pruning_sweep: (a: number, b: number, c: bigint) => [number, number, number, number];
export const response_curves: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
