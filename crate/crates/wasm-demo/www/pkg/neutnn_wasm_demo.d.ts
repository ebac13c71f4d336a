/* tslint:disable */
/* eslint-disable */

/**
 * Leakage and area of a design with `synapses` synapses on every node,
 * cheapest first.
 */
export function ppa_forecasts(synapses: number): string;

/**
 * Trains the clustering preset on synthetic bumps, then prunes it at each
 * threshold from 0 to `max_threshold` and reports the surviving synapses
 * and rand index.
 */
export function pruning_sweep(max_threshold: number, epochs: number, seed: bigint): string;

/**
 * Body potential contributed by one synapse over a gamma cycle, for both
 * response functions.
 */
export function response_curves(weight: number, t_in: number, t_max: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ppa_forecasts: (a: number) => [number, number];
    readonly pruning_sweep: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly response_curves: (a: number, b: number, c: number) => [number, number, number, number];
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
