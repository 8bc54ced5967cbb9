//! Block-sparse matrices with `nloc x nloc` blocks on the element adjacency
//! pattern.

use crate::mesh::Mesh;
use std::io::Write;
use std::sync::{Arc, OnceLock};

/// Block sparsity of a `J`-component system on a mesh. Block `c * ncells + i`
/// couples to the same element in every component and to the edge
/// neighbours of `i` in component `c`.
#[derive(Debug)]
pub struct BlockPattern {
    pub nloc: usize,
    pub ncells: usize,
    pub ncomp: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    csc: OnceLock<CscLayout>,
}

#[derive(Debug)]
struct CscLayout {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// Position in the block value array of every CSC entry.
    src: Vec<usize>,
}

impl BlockPattern {
    pub fn new(mesh: &Mesh, nloc: usize, ncomp: usize) -> Arc<Self> {
        let ncells = mesh.num_cells();
        let mut row_ptr = Vec::with_capacity(ncells * ncomp + 1);
        let mut cols = Vec::with_capacity(ncells * ncomp * (3 + ncomp));
        row_ptr.push(0);
        for c in 0..ncomp {
            for i in 0..ncells {
                let start = cols.len();
                for c2 in 0..ncomp {
                    cols.push(c2 * ncells + i);
                }
                for e in mesh.cell_edges(i) {
                    let edge = mesh.edge(e);
                    if let Some(r) = edge.right {
                        let j = if edge.left == i { r } else { edge.left };
                        cols.push(c * ncells + j);
                    }
                }
                cols[start..].sort_unstable();
                row_ptr.push(cols.len());
            }
        }
        Arc::new(BlockPattern { nloc, ncells, ncomp, row_ptr, cols, csc: OnceLock::new() })
    }

    pub fn nblocks(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.nblocks() * self.nloc
    }

    pub fn row(&self, bi: usize) -> &[usize] {
        &self.cols[self.row_ptr[bi]..self.row_ptr[bi + 1]]
    }

    pub fn num_stored_blocks(&self) -> usize {
        self.cols.len()
    }

    fn position(&self, bi: usize, bj: usize) -> Option<usize> {
        let row = self.row(bi);
        row.iter().position(|&c| c == bj).map(|p| self.row_ptr[bi] + p)
    }

    fn csc(&self) -> &CscLayout {
        self.csc.get_or_init(|| {
            // The pattern is structurally symmetric, so block column j has
            // the same block rows as block row j.
            let n = self.nloc;
            let nb = self.nblocks();
            let mut col_ptr = Vec::with_capacity(nb * n + 1);
            let mut row_idx = Vec::with_capacity(self.cols.len() * n * n);
            let mut src = Vec::with_capacity(self.cols.len() * n * n);
            col_ptr.push(0);
            for bj in 0..nb {
                let rows: Vec<(usize, usize)> =
                    self.row(bj).iter().map(|&bi| (bi, self.position(bi, bj).expect("symmetric pattern"))).collect();
                for cj in 0..n {
                    for &(bi, pos) in &rows {
                        for ri in 0..n {
                            row_idx.push(bi * n + ri);
                            src.push(pos * n * n + ri * n + cj);
                        }
                    }
                    col_ptr.push(row_idx.len());
                }
            }
            CscLayout { col_ptr, row_idx, src }
        })
    }
}

#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pattern: Arc<BlockPattern>,
    vals: Vec<f64>,
}

impl BlockMatrix {
    pub fn zeros(pattern: Arc<BlockPattern>) -> Self {
        let n = pattern.nloc;
        let vals = vec![0.0; pattern.cols.len() * n * n];
        BlockMatrix { pattern, vals }
    }

    pub fn pattern(&self) -> &Arc<BlockPattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn block(&self, bi: usize, bj: usize) -> Option<&[f64]> {
        let n2 = self.pattern.nloc * self.pattern.nloc;
        self.pattern.position(bi, bj).map(|p| &self.vals[p * n2..(p + 1) * n2])
    }

    /// Mutable block; panics if `(bi, bj)` is outside the pattern.
    pub fn block_mut(&mut self, bi: usize, bj: usize) -> &mut [f64] {
        let n2 = self.pattern.nloc * self.pattern.nloc;
        let p = self.pattern.position(bi, bj).unwrap_or_else(|| panic!("block ({bi}, {bj}) not in pattern"));
        &mut self.vals[p * n2..(p + 1) * n2]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let n = self.pattern.nloc;
        self.block(i / n, j / n).map_or(0.0, |b| b[(i % n) * n + j % n])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.pattern.nloc;
        let mut y = vec![0.0; self.dim()];
        for bi in 0..self.pattern.nblocks() {
            let yb = &mut y[bi * n..(bi + 1) * n];
            for p in self.pattern.row_ptr[bi]..self.pattern.row_ptr[bi + 1] {
                let bj = self.pattern.cols[p];
                let blk = &self.vals[p * n * n..(p + 1) * n * n];
                let xb = &x[bj * n..(bj + 1) * n];
                for (r, yr) in yb.iter_mut().enumerate() {
                    *yr += blk[r * n..(r + 1) * n].iter().zip(xb).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        y
    }

    /// `self += s * other` on a shared pattern.
    pub fn add_scaled(&mut self, other: &BlockMatrix, s: f64) {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern), "patterns differ");
        for (a, b) in self.vals.iter_mut().zip(&other.vals) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.vals {
            *a *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.pattern.nloc;
        let mut m: f64 = 0.0;
        for bi in 0..self.pattern.nblocks() {
            for &bj in self.pattern.row(bi) {
                let a = self.block(bi, bj).unwrap();
                let b = self.block(bj, bi).unwrap();
                for r in 0..n {
                    for c in 0..n {
                        m = m.max((a[r * n + c] - b[c * n + r]).abs());
                    }
                }
            }
        }
        m
    }

    /// Row-major dense copy, for small test systems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Nonzero blocks as `(block_row, block_col)` pairs.
    pub fn nonzero_blocks(&self) -> Vec<(usize, usize)> {
        let n2 = self.pattern.nloc * self.pattern.nloc;
        let mut out = Vec::new();
        for bi in 0..self.pattern.nblocks() {
            for p in self.pattern.row_ptr[bi]..self.pattern.row_ptr[bi + 1] {
                if self.vals[p * n2..(p + 1) * n2].iter().any(|&v| v != 0.0) {
                    out.push((bi, self.pattern.cols[p]));
                }
            }
        }
        out
    }

    pub fn to_faer(&self) -> faer::sparse::SparseColMat<usize, f64> {
        let l = self.pattern.csc();
        let d = self.dim();
        let symbolic =
            faer::sparse::SymbolicSparseColMat::new_checked(d, d, l.col_ptr.clone(), None, l.row_idx.clone());
        let vals = l.src.iter().map(|&s| self.vals[s]).collect();
        faer::sparse::SparseColMat::new(symbolic, vals)
    }

    /// Matrix Market coordinate dump (1-based, general, nonzeros only).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.pattern.nloc;
        let mut entries = Vec::new();
        for bi in 0..self.pattern.nblocks() {
            for p in self.pattern.row_ptr[bi]..self.pattern.row_ptr[bi + 1] {
                let bj = self.pattern.cols[p];
                for r in 0..n {
                    for c in 0..n {
                        let v = self.vals[p * n * n + r * n + c];
                        if v != 0.0 {
                            entries.push((bi * n + r + 1, bj * n + c + 1, v));
                        }
                    }
                }
            }
        }
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.dim(), self.dim(), entries.len())?;
        for (i, j, v) in entries {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}
