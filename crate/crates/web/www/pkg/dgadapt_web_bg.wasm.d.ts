/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_darcyview_free: (a: number, b: number) => void;
export const __wbg_layerdemo_free: (a: number, b: number) => void;
export const darcyview_contrast: (a: number) => number;
export const darcyview_imbalance: (a: number) => number;
export const darcyview_new: (a: number, b: number, c: number) => [number, number, number];
export const darcyview_speeds: (a: number) => [number, number];
export const darcyview_triangles: (a: number) => [number, number];
export const layerdemo_cells: (a: number) => number;
export const layerdemo_dofs: (a: number) => number;
export const layerdemo_editAt: (a: number, b: number, c: number, d: number) => [number, number, number];
export const layerdemo_indicators: (a: number) => [number, number];
export const layerdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const layerdemo_refineFraction: (a: number, b: number) => [number, number, number];
export const layerdemo_totalEstimate: (a: number) => number;
export const layerdemo_triangles: (a: number) => [number, number];
export const layerdemo_vertexValues: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
