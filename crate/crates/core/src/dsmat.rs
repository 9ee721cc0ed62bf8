//! Block-striped sparse storage.
//!
//! The rows of a square matrix are split into `n_stripes` horizontal stripes
//! of consecutive rows. Each stripe applies the same split to its columns and
//! keeps one compressed-row block per column stripe it actually couples to:
//! the diagonal block plus "left" (lower stripe id) and "right" (higher stripe
//! id) neighbor blocks. Blocks use local row and column numbering starting at
//! zero, so 4-byte indices suffice inside a block.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{AmgError, Result};
use crate::scalar::Scalar;
use crate::sparse::{Idx, MultiVector, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSide {
    Left,
    Diagonal,
    Right,
}

impl BlockSide {
    fn name(self) -> &'static str {
        match self {
            BlockSide::Left => "Left",
            BlockSide::Diagonal => "Diagonal",
            BlockSide::Right => "Right",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StripeBlock<T> {
    pub neighbor: usize,
    pub side: BlockSide,
    /// Local numbering: rows of the owning stripe, columns of `neighbor`.
    pub block: SparseMatrix<T>,
}

/// Blocks owned by one stripe, ordered by ascending neighbor id
/// (left blocks, then the diagonal, then right blocks).
#[derive(Clone, Debug)]
pub struct Stripe<T> {
    pub rows: Range<usize>,
    pub blocks: Vec<StripeBlock<T>>,
}

impl<T> Stripe<T> {
    pub fn neighbors(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.neighbor).collect()
    }
}

#[derive(Clone, Debug)]
pub struct StripedMatrix<T> {
    n: usize,
    ranges: Vec<Range<usize>>,
    stripes: Vec<Stripe<T>>,
}

/// Balanced split: the first `n mod p` stripes get one extra row.
pub fn stripe_ranges(n: usize, p: usize) -> Vec<Range<usize>> {
    let base = n / p;
    let extra = n % p;
    let mut out = Vec::with_capacity(p);
    let mut start = 0;
    for s in 0..p {
        let len = base + usize::from(s < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

impl<T: Scalar> StripedMatrix<T> {
    /// Splits a square matrix into `n_stripes` stripes.
    pub fn from_csr(a: &SparseMatrix<T>, n_stripes: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(AmgError::dims(
                "StripedMatrix::from_csr",
                "square matrix",
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        let n = a.nrows();
        if n_stripes == 0 || n_stripes > n {
            return Err(AmgError::InvalidParameter(format!(
                "n_stripes must lie in [1, {n}], got {n_stripes}"
            )));
        }
        let ranges = stripe_ranges(n, n_stripes);
        let mut owner = vec![0usize; n];
        for (s, r) in ranges.iter().enumerate() {
            owner[r.clone()].iter_mut().for_each(|o| *o = s);
        }
        let stripes = ranges
            .par_iter()
            .enumerate()
            .map(|(s, rows)| build_stripe(a, s, rows.clone(), &ranges, &owner))
            .collect();
        Ok(StripedMatrix {
            n,
            ranges,
            stripes,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_stripes(&self) -> usize {
        self.ranges.len()
    }

    pub fn stripe_ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn stripes(&self) -> &[Stripe<T>] {
        &self.stripes
    }

    pub fn nnz(&self) -> usize {
        self.stripes
            .iter()
            .flat_map(|s| s.blocks.iter())
            .map(|b| b.block.nnz())
            .sum()
    }

    /// Reassembles the global compressed-row matrix.
    pub fn to_csr(&self) -> SparseMatrix<T> {
        let mut offsets = Vec::with_capacity(self.n + 1);
        offsets.push(0);
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for stripe in &self.stripes {
            for local in 0..stripe.rows.len() {
                // blocks are in ascending neighbor order, so columns come out sorted
                for b in &stripe.blocks {
                    let shift = self.ranges[b.neighbor].start;
                    for (j, v) in b.block.row_iter(local) {
                        cols.push((shift + j) as Idx);
                        vals.push(v);
                    }
                }
                offsets.push(cols.len());
            }
        }
        SparseMatrix::from_parts_unchecked(self.n, self.n, offsets, cols, vals)
    }

    /// `y = M x`; stripes run concurrently and read neighbor slices of `x` in place.
    pub fn mul_vec(&self, x: &[T], y: &mut [T]) -> Result<()> {
        if x.len() != self.n || y.len() != self.n {
            return Err(AmgError::dims("spmv_striped", self.n, x.len().min(y.len())));
        }
        let mut outs: Vec<&mut [T]> = Vec::with_capacity(self.stripes.len());
        let mut rest = y;
        for r in &self.ranges {
            let (head, tail) = rest.split_at_mut(r.len());
            outs.push(head);
            rest = tail;
        }
        self.stripes
            .par_iter()
            .zip(outs.into_par_iter())
            .for_each(|(stripe, out)| {
                let slices: Vec<&[T]> = stripe
                    .blocks
                    .iter()
                    .map(|b| &x[self.ranges[b.neighbor].clone()])
                    .collect();
                // one running sum per row across Left, Diagonal, Right blocks in
                // ascending neighbor order: the same order as the global CSR row
                for (local, o) in out.iter_mut().enumerate() {
                    let mut s = T::zero();
                    for (b, xs) in stripe.blocks.iter().zip(&slices) {
                        let (c, v) = b.block.row(local);
                        for (&j, &a) in c.iter().zip(v) {
                            s += a * xs[j as usize];
                        }
                    }
                    *o = s;
                }
            });
        Ok(())
    }

    /// Per-stripe block inventory, one line per stored block.
    pub fn inventory(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# stripes={} n={} nnz={}",
            self.n_stripes(),
            self.n,
            self.nnz()
        );
        let _ = writeln!(s, "stripe neighbor side rows cols nnz");
        for (id, stripe) in self.stripes.iter().enumerate() {
            for b in &stripe.blocks {
                let _ = writeln!(
                    s,
                    "{} {} {} {} {} {}",
                    id,
                    b.neighbor,
                    b.side.name(),
                    b.block.nrows(),
                    b.block.ncols(),
                    b.block.nnz()
                );
            }
        }
        s
    }
}

fn build_stripe<T: Scalar>(
    a: &SparseMatrix<T>,
    s: usize,
    rows: Range<usize>,
    ranges: &[Range<usize>],
    owner: &[usize],
) -> Stripe<T> {
    // neighbor stripes touched by this stripe's rows
    let mut touched: Vec<usize> = rows
        .clone()
        .flat_map(|i| a.row(i).0.iter().map(|&j| owner[j as usize]))
        .collect();
    touched.sort_unstable();
    touched.dedup();
    let nloc = rows.len();
    let blocks = touched
        .into_iter()
        .map(|nb| {
            let cr = &ranges[nb];
            let mut offsets = Vec::with_capacity(nloc + 1);
            offsets.push(0);
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            for i in rows.clone() {
                for (j, v) in a.row_iter(i) {
                    if cr.contains(&j) {
                        cols.push((j - cr.start) as Idx);
                        vals.push(v);
                    }
                }
                offsets.push(cols.len());
            }
            let side = match nb.cmp(&s) {
                std::cmp::Ordering::Less => BlockSide::Left,
                std::cmp::Ordering::Equal => BlockSide::Diagonal,
                std::cmp::Ordering::Greater => BlockSide::Right,
            };
            StripeBlock {
                neighbor: nb,
                side,
                block: SparseMatrix::from_parts_unchecked(nloc, cr.len(), offsets, cols, vals),
            }
        })
        .collect();
    Stripe { rows, blocks }
}

/// Block-striped product for a block of vectors.
pub fn spmv_striped<T: Scalar>(m: &StripedMatrix<T>, x: &MultiVector<T>) -> Result<MultiVector<T>> {
    if x.nrows() != m.dim() {
        return Err(AmgError::dims("spmv_striped", m.dim(), x.nrows()));
    }
    let mut out = MultiVector::zeros(m.dim(), x.ncols());
    let mut y = vec![T::zero(); m.dim()];
    for j in 0..x.ncols() {
        m.mul_vec(&x.column(j), &mut y)?;
        out.set_column(j, &y);
    }
    Ok(out)
}
