/* tslint:disable */
/* eslint-disable */

export function applyPatch(document: string, patch: string): string;

export function checkContrast(fg: string, bg: string, font_size: number, font_weight: number, theme: string): string;

export function critique(document: string, context: string, mode: string): string;

export function fixOptions(document: string, context: string, issue: string): string;

export function render(document: string, highlight: string): string;

export function sampleContext(): string;

export function sampleDocument(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly applyPatch: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly checkContrast: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly critique: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly fixOptions: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly render: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly sampleContext: () => [number, number];
    readonly sampleDocument: () => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
