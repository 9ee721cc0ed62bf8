//! Strength of connection, strength filtering and PMIS coarse-point selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{AmgError, Result};
use crate::scalar::Scalar;
use crate::sparse::{transpose, CfPartition, Idx, MultiVector, NodeLabel, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SocKind {
    /// `max(-a_ij, 0)` relative to the largest negative coupling of row `i`.
    Classical,
    /// `|a_ij| / sqrt(a_ii a_jj)`.
    StrongCoupling,
    /// Squared cosine between rows `i` and `j` of the test space.
    Affinity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SocFilter {
    /// Relative per-row threshold (absolute for affinity).
    Threshold(f64),
    /// Keep about `n * d` of the strongest edges, then symmetrize.
    AvgDegree(f64),
}

impl SocFilter {
    /// θ = 0.25 for the matrix-based measures, average degree 4 for affinity.
    pub fn default_for(kind: SocKind) -> Self {
        match kind {
            SocKind::Affinity => SocFilter::AvgDegree(4.0),
            _ => SocFilter::Threshold(0.25),
        }
    }
}

/// Off-diagonal pattern of `A` with a strength and a kept flag per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct SocGraph<T> {
    kind: SocKind,
    offsets: Vec<usize>,
    cols: Vec<Idx>,
    strength: Vec<T>,
    kept: Vec<bool>,
}

impl<T: Scalar> SocGraph<T> {
    pub fn kind(&self) -> SocKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.cols.len()
    }

    pub fn n_kept(&self) -> usize {
        self.kept.iter().filter(|k| **k).count()
    }

    /// `(j, s_ij, kept)` for every off-diagonal entry of row `i`.
    pub fn edges(&self, i: usize) -> impl Iterator<Item = (usize, T, bool)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.strength[r.clone()])
            .zip(&self.kept[r])
            .map(|((&j, &s), &k)| (j as usize, s, k))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Strong neighbours `S_i` of row `i`, ascending.
    pub fn strong(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges(i).filter(|e| e.2).map(|e| e.0)
    }

    pub fn is_strong(&self, i: usize, j: usize) -> bool {
        let r = self.offsets[i]..self.offsets[i + 1];
        match self.cols[r.clone()].binary_search(&(j as Idx)) {
            Ok(p) => self.kept[r.start + p],
            Err(_) => false,
        }
    }

    pub fn strength(&self, i: usize, j: usize) -> Option<T> {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .binary_search(&(j as Idx))
            .ok()
            .map(|p| self.strength[r.start + p])
    }

    /// Undirected kept graph: `j` adjacent to `i` when either direction is kept.
    pub fn kept_adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in self.strong(i) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Keeps exactly the edges flagged by `keep` (row, col order).
    pub fn with_kept(&self, keep: impl Fn(usize, usize, T) -> bool) -> Self {
        let mut g = self.clone();
        for i in 0..self.n() {
            for p in self.offsets[i]..self.offsets[i + 1] {
                g.kept[p] = keep(i, self.cols[p] as usize, self.strength[p]);
            }
        }
        g
    }
}

/// Strength of every off-diagonal connection of `A`; all edges start kept.
pub fn compute_soc<T: Scalar>(
    a: &SparseMatrix<T>,
    kind: SocKind,
    v: Option<&MultiVector<T>>,
) -> Result<SocGraph<T>> {
    if !a.is_square() {
        return Err(AmgError::dims(
            "compute_soc",
            "square matrix",
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    let n = a.nrows();
    let diag = a.diagonal();
    if let Some(row) = diag.iter().position(|d| *d == T::zero()) {
        return Err(AmgError::ZeroDiagonal { row });
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::with_capacity(a.nnz());
    for i in 0..n {
        let (c, _) = a.row(i);
        cols.extend(c.iter().copied().filter(|&j| j as usize != i));
        offsets.push(cols.len());
    }

    let strength: Vec<T> = match kind {
        SocKind::Classical => {
            let at = transpose(a);
            // largest negative coupling over row and column of i
            let denom: Vec<T> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut m = T::zero();
                    for (j, v) in a.row_iter(i).chain(at.row_iter(i)) {
                        if j != i && -v > m {
                            m = -v;
                        }
                    }
                    m
                })
                .collect();
            (0..n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let d = denom[i];
                    a.row_iter(i).filter(move |e| e.0 != i).map(move |(_, v)| {
                        if d > T::zero() {
                            (-v).max(T::zero()) / d
                        } else {
                            T::zero()
                        }
                    })
                })
                .collect()
        }
        SocKind::StrongCoupling => {
            if let Some(row) = diag.iter().position(|d| *d < T::zero()) {
                return Err(AmgError::NegativeDiagonal { row });
            }
            (0..n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let diag = &diag;
                    a.row_iter(i)
                        .filter(move |e| e.0 != i)
                        .map(move |(j, v)| v.abs() / (diag[i] * diag[j]).sqrt())
                })
                .collect()
        }
        SocKind::Affinity => {
            let v = v.ok_or_else(|| {
                AmgError::InvalidParameter("affinity strength needs test vectors".into())
            })?;
            if v.ncols() == 0 || v.nrows() != n {
                return Err(AmgError::dims("compute_soc affinity", n, v.nrows()));
            }
            let sq: Vec<T> = (0..n).map(|i| v.row(i).iter().map(|x| *x * *x).sum()).collect();
            (0..n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let sq = &sq;
                    a.row_iter(i).filter(move |e| e.0 != i).map(move |(j, _)| {
                        if sq[i] == T::zero() || sq[j] == T::zero() {
                            return T::zero();
                        }
                        let d: T = v.row(i).iter().zip(v.row(j)).map(|(x, y)| *x * *y).sum();
                        (d * d / (sq[i] * sq[j])).min(T::one())
                    })
                })
                .collect()
        }
    };
    let kept = vec![true; cols.len()];
    Ok(SocGraph {
        kind,
        offsets,
        cols,
        strength,
        kept,
    })
}

/// Sets the kept flags of `G` according to `rule`, starting from all edges.
pub fn filter_soc<T: Scalar>(g: &SocGraph<T>, rule: SocFilter) -> Result<SocGraph<T>> {
    match rule {
        SocFilter::Threshold(theta) => {
            if !(0.0..=1.0).contains(&theta) {
                return Err(AmgError::InvalidParameter(format!(
                    "strength threshold {theta} outside [0, 1]"
                )));
            }
            let theta = T::of(theta);
            let absolute = g.kind == SocKind::Affinity;
            let row_max: Vec<T> = (0..g.n())
                .map(|i| g.edges(i).map(|e| e.1).fold(T::zero(), T::max))
                .collect();
            Ok(g.with_kept(|i, _, s| {
                if theta == T::zero() {
                    true
                } else if absolute {
                    s >= theta
                } else {
                    s > T::zero() && s >= theta * row_max[i]
                }
            }))
        }
        SocFilter::AvgDegree(d) => {
            if !(d >= 1.0) {
                return Err(AmgError::InvalidParameter(format!(
                    "average degree {d} must be at least 1"
                )));
            }
            let target = ((g.n() as f64) * d).round() as usize;
            let chosen = strongest_edges(g, target);
            let mut sel = vec![false; g.n_edges()];
            for p in chosen {
                sel[p] = true;
            }
            // symmetrize by union
            let pos = |i: usize, j: usize| -> Option<usize> {
                let r = g.offsets[i]..g.offsets[i + 1];
                g.cols[r.clone()]
                    .binary_search(&(j as Idx))
                    .ok()
                    .map(|p| r.start + p)
            };
            let mut kept = sel.clone();
            for i in 0..g.n() {
                for p in g.offsets[i]..g.offsets[i + 1] {
                    if sel[p] {
                        if let Some(q) = pos(g.cols[p] as usize, i) {
                            kept[q] = true;
                        }
                    }
                }
            }
            let mut out = g.clone();
            out.kept = kept;
            Ok(out)
        }
    }
}

/// Positions of the `count` strongest directed edges, ordered by strength
/// descending, then row, then column.
pub fn strongest_edges<T: Scalar>(g: &SocGraph<T>, count: usize) -> Vec<usize> {
    let mut order: Vec<(usize, usize)> = (0..g.n())
        .flat_map(|i| (g.offsets[i]..g.offsets[i + 1]).map(move |p| (i, p)))
        .collect();
    order.sort_by(|x, y| {
        g.strength[y.1]
            .partial_cmp(&g.strength[x.1])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.0.cmp(&y.0))
            .then(g.cols[x.1].cmp(&g.cols[y.1]))
    });
    order.into_iter().take(count).map(|e| e.1).collect()
}

/// Random part of the PMIS weight of `node`, reproducible for any thread count.
pub fn pmis_weight_noise(seed: u64, node: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng.gen::<f64>()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Undecided,
    Coarse,
    Fine,
}

/// Parallel maximal independent set on the undirected kept graph.
///
/// Nodes without kept edges are Coarse when their row of `A` has no
/// off-diagonal entries at all and Fine otherwise.
pub fn pmis<T: Scalar>(g: &SocGraph<T>, seed: u64) -> CfPartition {
    let n = g.n();
    let adj = g.kept_adjacency();
    let weight: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| adj[i].len() as f64 + pmis_weight_noise(seed, i))
        .collect();
    let mut state: Vec<State> = (0..n)
        .map(|i| {
            if !adj[i].is_empty() {
                State::Undecided
            } else if g.degree(i) == 0 {
                State::Coarse
            } else {
                State::Fine
            }
        })
        .collect();
    // (weight, id) ordering makes every comparison strict
    let beats = |i: usize, j: usize| (weight[i], i) > (weight[j], j);
    loop {
        let new_coarse: Vec<usize> = (0..n)
            .into_par_iter()
            .filter(|&i| {
                state[i] == State::Undecided
                    && adj[i]
                        .iter()
                        .all(|&j| state[j] != State::Undecided || beats(i, j))
            })
            .collect();
        if new_coarse.is_empty() {
            break;
        }
        for &c in &new_coarse {
            state[c] = State::Coarse;
        }
        for &c in &new_coarse {
            for &j in &adj[c] {
                if state[j] == State::Undecided {
                    state[j] = State::Fine;
                }
            }
        }
    }
    debug_assert!(state.iter().all(|s| *s != State::Undecided));
    CfPartition::from_labels(
        state
            .into_iter()
            .map(|s| {
                if s == State::Coarse {
                    NodeLabel::Coarse
                } else {
                    NodeLabel::Fine
                }
            })
            .collect(),
    )
}
