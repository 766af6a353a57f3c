//! Dense GF(2) linear algebra on bit-vectors: rank, kernel bases, repeated
//! solves against a fixed matrix, and reduction modulo a subspace.
//!
//! Sizes here are small (a few thousand columns at most), so a
//! word-packed Gaussian elimination is more than fast enough.

use bitvec::prelude::*;

pub type BitRow = BitVec<u64, Lsb0>;

/// XOR `src` into `dst` word-by-word. Both must have equal length.
pub fn xor_into(dst: &mut BitRow, src: &BitRow) {
    debug_assert_eq!(dst.len(), src.len());
    for (a, b) in dst.as_raw_mut_slice().iter_mut().zip(src.as_raw_slice()) {
        *a ^= *b;
    }
}

/// Parity of the AND of two equal-length rows.
pub fn and_parity(a: &BitRow, b: &BitRow) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0u32;
    for (x, y) in a.as_raw_slice().iter().zip(b.as_raw_slice()) {
        acc ^= (x & y).count_ones() & 1;
    }
    acc & 1 == 1
}

pub fn zero_row(ncols: usize) -> BitRow {
    bitvec![u64, Lsb0; 0; ncols]
}

/// A dense GF(2) matrix held as a list of rows.
#[derive(Clone, Debug)]
pub struct BitMatrix {
    pub ncols: usize,
    pub rows: Vec<BitRow>,
}

impl BitMatrix {
    pub fn new(ncols: usize) -> Self {
        BitMatrix { ncols, rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: BitRow) {
        debug_assert_eq!(row.len(), self.ncols);
        self.rows.push(row);
    }

    /// Basis of the null space {x : Ax = 0}, via reduced row echelon form.
    pub fn kernel_basis(&self) -> Vec<BitRow> {
        let (rref, pivots) = self.rref();
        let mut is_pivot = vec![false; self.ncols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for f in 0..self.ncols {
            if is_pivot[f] {
                continue;
            }
            let mut v = zero_row(self.ncols);
            v.set(f, true);
            for (r, &p) in rref.iter().zip(&pivots) {
                if r[f] {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        basis
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Reduced row echelon form: returns the nonzero rows and their pivot columns.
    fn rref(&self) -> (Vec<BitRow>, Vec<usize>) {
        let mut rows = self.rows.clone();
        let mut rref: Vec<BitRow> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for col in 0..self.ncols {
            let Some(i) = rows.iter().position(|r| r[col]) else {
                continue;
            };
            let pivot_row = rows.swap_remove(i);
            for r in rows.iter_mut() {
                if r[col] {
                    xor_into(r, &pivot_row);
                }
            }
            for (r, _) in rref.iter_mut().zip(&pivots) {
                if r[col] {
                    xor_into(r, &pivot_row);
                }
            }
            rref.push(pivot_row);
            pivots.push(col);
        }
        (rref, pivots)
    }
}

/// Repeated-solve factorisation of a fixed matrix A: given b, find some x
/// with Ax = b, or report that none exists.
///
/// Keeps the RREF of A together with the row combinations that produced it,
/// so each solve costs one pass over the recorded rows.
pub struct Solver {
    ncols: usize,
    /// Nonzero RREF rows of A, paired with their pivot column.
    rref: Vec<(usize, BitRow)>,
    /// For each RREF row, the combination of original rows that produced it.
    combos: Vec<BitRow>,
    /// Combinations of original rows that vanished (left null space of A);
    /// consistency of b requires these combinations of b's entries to be 0.
    null_combos: Vec<BitRow>,
}

impl Solver {
    pub fn new(a: &BitMatrix) -> Self {
        let nrows = a.rows.len();
        let mut rows: Vec<(BitRow, BitRow)> = a
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut c = zero_row(nrows);
                c.set(i, true);
                (r.clone(), c)
            })
            .collect();
        let mut rref: Vec<(usize, BitRow)> = Vec::new();
        let mut combos: Vec<BitRow> = Vec::new();
        for col in 0..a.ncols {
            let Some(i) = rows.iter().position(|(r, _)| r[col]) else {
                continue;
            };
            let (pr, pc) = rows.swap_remove(i);
            for (r, c) in rows.iter_mut() {
                if r[col] {
                    xor_into(r, &pr);
                    xor_into(c, &pc);
                }
            }
            for ((p, r), c) in rref.iter_mut().zip(combos.iter_mut()) {
                debug_assert_ne!(*p, col);
                if r[col] {
                    xor_into(r, &pr);
                    xor_into(c, &pc);
                }
            }
            rref.push((col, pr));
            combos.push(pc);
        }
        let null_combos = rows.into_iter().map(|(_, c)| c).collect();
        Solver { ncols: a.ncols, rref, combos, null_combos }
    }

    /// Solve Ax = b. `b` must have one bit per row of A.
    pub fn solve(&self, b: &BitRow) -> Option<BitRow> {
        for c in &self.null_combos {
            if and_parity(c, b) {
                return None;
            }
        }
        let mut x = zero_row(self.ncols);
        for ((pivot, _), combo) in self.rref.iter().zip(&self.combos) {
            if and_parity(combo, b) {
                x.set(*pivot, true);
            }
        }
        Some(x)
    }
}

/// Incrementally built echelon basis of a subspace; supports membership
/// tests and canonical reduction modulo the subspace.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    /// Rows sorted by pivot column; each row's pivot is zero in all others.
    rows: Vec<(usize, BitRow)>,
}

impl Echelon {
    pub fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Insert a vector; returns true if it enlarged the span.
    pub fn insert(&mut self, v: &BitRow) -> bool {
        let mut v = v.clone();
        for (p, row) in &self.rows {
            if v[*p] {
                xor_into(&mut v, row);
            }
        }
        let Some(pivot) = v.first_one() else {
            return false;
        };
        // Keep the basis reduced: clear the new pivot from existing rows.
        for (_, row) in self.rows.iter_mut() {
            if row[pivot] {
                xor_into(row, &v);
            }
        }
        let at = self.rows.partition_point(|(p, _)| *p < pivot);
        self.rows.insert(at, (pivot, v));
        true
    }

    /// Canonical representative of `v` modulo the stored subspace.
    pub fn reduce(&self, v: &BitRow) -> BitRow {
        let mut v = v.clone();
        for (p, row) in &self.rows {
            if v[*p] {
                xor_into(&mut v, row);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitRow) -> bool {
        self.reduce(v).not_any()
    }
}
