/* tslint:disable */
/* eslint-disable */

/**
 * Darcy velocity through three high-permeability streaks.
 */
export class DarcyView {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Mean speed in the streaks over the mean speed outside.
     */
    contrast(): number;
    /**
     * Relative mismatch of inflow and outflow.
     */
    imbalance(): number;
    constructor(multiplier: number, nx: number, ny: number);
    /**
     * Speed at the centroid of every triangle.
     */
    speeds(): Float64Array;
    triangles(): Float64Array;
}

/**
 * Steady boundary-layer problem on an adaptively refined mesh.
 */
export class LayerDemo {
    free(): void;
    [Symbol.dispose](): void;
    cells(): number;
    dofs(): number;
    editAt(x: number, y: number, coarsen: boolean): boolean;
    /**
     * Squared element indicators.
     */
    indicators(): Float64Array;
    constructor(eps: number, bx: number, by: number, degree: number);
    refineFraction(fraction: number): number;
    totalEstimate(): number;
    /**
     * Vertex coordinates, six numbers per triangle.
     */
    triangles(): Float64Array;
    /**
     * Solution values at the three vertices of every triangle.
     */
    vertexValues(): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_darcyview_free: (a: number, b: number) => void;
    readonly __wbg_layerdemo_free: (a: number, b: number) => void;
    readonly darcyview_contrast: (a: number) => number;
    readonly darcyview_imbalance: (a: number) => number;
    readonly darcyview_new: (a: number, b: number, c: number) => [number, number, number];
    readonly darcyview_speeds: (a: number) => [number, number];
    readonly darcyview_triangles: (a: number) => [number, number];
    readonly layerdemo_cells: (a: number) => number;
    readonly layerdemo_dofs: (a: number) => number;
    readonly layerdemo_editAt: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly layerdemo_indicators: (a: number) => [number, number];
    readonly layerdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly layerdemo_refineFraction: (a: number, b: number) => [number, number, number];
    readonly layerdemo_totalEstimate: (a: number) => number;
    readonly layerdemo_triangles: (a: number) => [number, number];
    readonly layerdemo_vertexValues: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
