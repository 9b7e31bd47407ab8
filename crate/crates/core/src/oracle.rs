//! Brute-force reference implementations for the test suites.
//!
//! Nothing here calls into the fast paths of `state`, `dynamics`,
//! `intertwiners` or `polymer`; only the plain data types are shared. All
//! routines are deliberately naive and limited to small vertex counts.

use std::ops::Neg;

use num_traits::Num;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, SubsetId};
use crate::polymer::SetPartition;

pub use num_rational::BigRational;

/// Vertex cap for the dense spin-basis Hamiltonian.
pub const DENSE_MAX_VERTICES: usize = 12;

/// Element cap for partition enumeration.
pub const PARTITION_MAX_ELEMENTS: usize = 10;

/// Scalars the naive algebra works over: `f64` or exact rationals.
pub trait Scalar: Num + Clone + Neg<Output = Self> {}
impl<T: Num + Clone + Neg<Output = T>> Scalar for T {}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl DenseOperator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseOperator { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        self.entries[r * self.cols + c] += v;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.get(r, c) == self.get(c, r)))
    }

    /// Restriction of a full `2^N`-basis operator to masks of popcount `n`.
    pub fn sector_block(&self, n: usize) -> DenseOperator {
        let idx = masks_with_popcount(self.rows.trailing_zeros() as usize, n);
        let mut out = DenseOperator::zeros(idx.len(), idx.len());
        for (a, &r) in idx.iter().enumerate() {
            for (b, &c) in idx.iter().enumerate() {
                out.entries[a * idx.len() + b] = self.get(r, c);
            }
        }
        out
    }
}

/// Masks of popcount `n` in increasing order, by filtering.
pub fn masks_with_popcount(n_vertices: usize, n: usize) -> Vec<usize> {
    (0..1usize << n_vertices).filter(|m| m.count_ones() as usize == n).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Spin {
    Up,
    Down,
}

/// Basis label to spin configuration: sites in the set are up.
fn spins_of(mask: usize, n: usize) -> Vec<Spin> {
    (0..n).map(|i| if mask >> i & 1 == 1 { Spin::Up } else { Spin::Down }).collect()
}

fn index_of(spins: &[Spin]) -> usize {
    spins.iter().enumerate().fold(0, |m, (i, s)| if *s == Spin::Up { m | 1 << i } else { m })
}

/// `H = -Σ_{i~j} (I_ij - 1)` on the full spin basis, with `I_ij` built by
/// swapping the spins at sites `i` and `j`.
pub fn build_hamiltonian_dense(lat: &Lattice) -> Result<DenseOperator> {
    let n = lat.n_vertices();
    if n > DENSE_MAX_VERTICES {
        return Err(Error::Size { what: "vertex count for dense Hamiltonian", actual: n, limit: DENSE_MAX_VERTICES });
    }
    let dim = 1 << n;
    let mut h = DenseOperator::zeros(dim, dim);
    for col in 0..dim {
        let spins = spins_of(col, n);
        for i in 0..n {
            for &j in lat.neighbors(i) {
                if j <= i {
                    continue;
                }
                let mut swapped = spins.clone();
                swapped.swap(i, j);
                let row = index_of(&swapped);
                h.add(row, col, -1.0);
                h.add(col, col, 1.0);
            }
        }
    }
    Ok(h)
}

/// Matrix of the superset-sum map from popcount-`r` masks to popcount-`s`
/// masks: entry 1 iff the row set is contained in the column set.
pub fn dense_intertwiner(n_vertices: usize, r: usize, s: usize) -> Result<DenseOperator> {
    if n_vertices > DENSE_MAX_VERTICES {
        return Err(Error::Size { what: "vertex count for dense intertwiner", actual: n_vertices, limit: DENSE_MAX_VERTICES });
    }
    let rows = masks_with_popcount(n_vertices, s);
    let cols = masks_with_popcount(n_vertices, r);
    let mut t = DenseOperator::zeros(rows.len(), cols.len());
    for (a, &row) in rows.iter().enumerate() {
        for (b, &col) in cols.iter().enumerate() {
            let include = if s == r { row == col } else { s < r && row & !col == 0 };
            if include {
                t.add(a, b, 1.0);
            }
        }
    }
    Ok(t)
}

/// `out[S] = Σ_{T ⊇ S} xs[T]` by the double loop.
pub fn naive_superset_sums<T: Scalar>(xs: &[T]) -> Vec<T> {
    (0..xs.len())
        .map(|s| {
            (0..xs.len())
                .filter(|t| t & s == s)
                .fold(T::zero(), |acc, t| acc + xs[t].clone())
        })
        .collect()
}

/// Set partitions of `s` in restricted-growth-string order.
pub fn enumerate_partitions(s: SubsetId) -> Result<impl Iterator<Item = SetPartition>> {
    let elems: Vec<usize> = (0..32).filter(|&v| s.0 >> v & 1 == 1).collect();
    if elems.len() > PARTITION_MAX_ELEMENTS {
        return Err(Error::Size {
            what: "set size for partition enumeration",
            actual: elems.len(),
            limit: PARTITION_MAX_ELEMENTS,
        });
    }
    Ok(RgsPartitions::new(elems))
}

struct RgsPartitions {
    elems: Vec<usize>,
    rgs: Vec<usize>,
    done: bool,
}

impl RgsPartitions {
    fn new(elems: Vec<usize>) -> Self {
        let k = elems.len();
        RgsPartitions { elems, rgs: vec![0; k], done: false }
    }

    /// Next string with `a[0] = 0` and `a[i] ≤ 1 + max(a[..i])`.
    fn advance(&mut self) -> bool {
        let k = self.rgs.len();
        for i in (1..k).rev() {
            let max_prefix = self.rgs[..i].iter().copied().max().unwrap_or(0);
            if self.rgs[i] <= max_prefix {
                self.rgs[i] += 1;
                for x in &mut self.rgs[i + 1..] {
                    *x = 0;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for RgsPartitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let n_blocks = self.rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![0u32; n_blocks];
        for (&e, &b) in self.elems.iter().zip(&self.rgs) {
            blocks[b] |= 1 << e;
        }
        self.done = !self.advance();
        Some(SetPartition::new(blocks.into_iter().map(SubsetId).collect()))
    }
}

/// Solve `c(S) = u(S) + Σ_{proper P of S} Π_{B∈P} u(B)` by listing every
/// proper partition, in order of increasing `|S|`. Returns the unified
/// weights indexed by mask (`u({i}) = φ_i`, `u(∅) = 0`).
pub fn solve_u_by_partitions<T: Scalar>(c: &[T]) -> Result<Vec<T>> {
    let n = c.len().trailing_zeros() as usize;
    if n > PARTITION_MAX_ELEMENTS {
        return Err(Error::Size { what: "vertex count for naive solve", actual: n, limit: PARTITION_MAX_ELEMENTS });
    }
    let mut u = vec![T::zero(); c.len()];
    for size in 1..=n {
        for s in masks_with_popcount(n, size) {
            let mut acc = c[s].clone();
            for p in enumerate_partitions(SubsetId(s as u32))?.filter(SetPartition::is_proper) {
                let prod = p.blocks.iter().fold(T::one(), |a, b| a * u[b.index()].clone());
                acc = acc - prod;
            }
            u[s] = acc;
        }
    }
    Ok(u)
}

/// Literal expansion: for every basis set `S`, sum over partitions of the
/// whole vertex set of the product of block columns read at `S`.
pub fn reconstruct_by_partitions<T: Scalar>(u: &[T]) -> Result<Vec<T>> {
    let n = u.len().trailing_zeros() as usize;
    if n > 8 {
        return Err(Error::Size { what: "vertex count for literal reconstruction", actual: n, limit: 8 });
    }
    let partitions: Vec<SetPartition> = enumerate_partitions(SubsetId(((1usize << n) - 1) as u32))?.collect();
    let f = (0..u.len())
        .map(|s| {
            partitions.iter().fold(T::zero(), |acc, p| {
                let term = p.blocks.iter().fold(T::one(), |a, b| {
                    let factor = if b.cardinality() == 1 {
                        let phi = u[b.index()].clone();
                        if b.0 as usize & s != 0 {
                            phi
                        } else {
                            T::one() - phi
                        }
                    } else {
                        let outside = (b.0 as usize & !s).count_ones();
                        if outside.is_multiple_of(2) {
                            u[b.index()].clone()
                        } else {
                            -u[b.index()].clone()
                        }
                    };
                    a * factor
                });
                acc + term
            })
        })
        .collect();
    Ok(f)
}

/// Exact `f → c → u → f` over the rationals.
pub fn exact_roundtrip(f: &[BigRational]) -> Result<Vec<BigRational>> {
    let c = naive_superset_sums(f);
    let u = solve_u_by_partitions(&c)?;
    reconstruct_by_partitions(&u)
}
