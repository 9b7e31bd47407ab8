//! Subset-indexed coefficient vectors.
//!
//! A [`SubsetVector`] stores one real coefficient per subset of the vertex
//! set, densely, at the index equal to the subset's bitmask. A
//! [`SectorVector`] holds only the coefficients of subsets with a fixed
//! cardinality `n` (the `n` spin-wave sector), ordered by increasing mask.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{SubsetId, MAX_VERTICES};

/// Sums with absolute value at or below this cannot be normalized.
pub const NORMALIZATION_EPS: f64 = 1e-12;

/// Binomial coefficient `C(n, k)` as `usize`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Colexicographic rank of a mask among all masks with the same popcount.
/// Colex order on `k`-subsets coincides with increasing integer order of the
/// masks.
pub fn sector_rank(mask: u32) -> usize {
    let mut rank = 0;
    let mut m = mask;
    let mut k = 1;
    while m != 0 {
        let pos = m.trailing_zeros() as usize;
        rank += binomial(pos, k);
        m &= m - 1;
        k += 1;
    }
    rank
}

/// All masks of cardinality `n` over `n_vertices` bits, in increasing order.
pub fn sector_masks(n_vertices: usize, n: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(n_vertices, n));
    if n > n_vertices {
        return out;
    }
    if n == 0 {
        out.push(0);
        return out;
    }
    let limit = 1u64 << n_vertices;
    let mut m: u64 = (1u64 << n) - 1;
    // Gosper's hack
    while m < limit {
        out.push(m as u32);
        let c = m & m.wrapping_neg();
        let r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetVector {
    n_vertices: usize,
    coeffs: Vec<f64>,
}

impl SubsetVector {
    pub fn zeros(n_vertices: usize) -> Result<Self> {
        check_vertex_count(n_vertices)?;
        Ok(SubsetVector { n_vertices, coeffs: vec![0.0; 1 << n_vertices] })
    }

    /// Wrap a coefficient array whose length must be `2^n_vertices`.
    pub fn from_coeffs(n_vertices: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_vertex_count(n_vertices)?;
        if coeffs.len() != 1 << n_vertices {
            return Err(Error::arg(format!(
                "expected {} coefficients for {} vertices, got {}",
                1usize << n_vertices,
                n_vertices,
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::arg(format!("coefficient at mask {i} is not finite")));
        }
        Ok(SubsetVector { n_vertices, coeffs })
    }

    /// Basis vector: coefficient 1 on `s`, zero elsewhere.
    pub fn indicator(n_vertices: usize, s: SubsetId) -> Result<Self> {
        let mut v = Self::zeros(n_vertices)?;
        if s.index() >= v.len() {
            return Err(Error::arg(format!("subset {s} out of range for {n_vertices} vertices")));
        }
        v.coeffs[s.index()] = 1.0;
        Ok(v)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, s: SubsetId) -> f64 {
        self.coeffs[s.index()]
    }

    pub fn set(&mut self, s: SubsetId, value: f64) {
        self.coeffs[s.index()] = value;
    }

    pub fn total_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Scale so the coefficients sum to one.
    pub fn normalize(&self) -> Result<SubsetVector> {
        let sum = self.total_sum();
        if sum.abs() <= NORMALIZATION_EPS || !sum.is_finite() {
            return Err(Error::DegenerateNormalization { sum });
        }
        Ok(SubsetVector {
            n_vertices: self.n_vertices,
            coeffs: self.coeffs.iter().map(|c| c / sum).collect(),
        })
    }

    pub fn sector_project(&self, n: usize) -> Result<SectorVector> {
        if n > self.n_vertices {
            return Err(Error::arg(format!(
                "sector {n} out of range for {} vertices",
                self.n_vertices
            )));
        }
        let entries = sector_masks(self.n_vertices, n)
            .into_iter()
            .map(|m| self.coeffs[m as usize])
            .collect();
        Ok(SectorVector { n_vertices: self.n_vertices, n, entries })
    }

    /// Max-abs difference to another vector of the same size.
    pub fn max_abs_diff(&self, other: &SubsetVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Output at `S` is the sum of the input over all supersets `T ⊇ S`.
    pub fn superset_zeta(&self) -> SubsetVector {
        let mut out = self.clone();
        superset_sums(&mut out.coeffs);
        out
    }

    /// Inverse of [`superset_zeta`](Self::superset_zeta):
    /// `f(S) = Σ_{T ⊇ S} (-1)^{|T \ S|} c(T)`.
    pub fn superset_mobius(&self) -> SubsetVector {
        let mut out = self.clone();
        inv_superset_sums(&mut out.coeffs);
        out
    }

    /// Relabel vertices: the coefficient of `S` moves to `{perm[v] : v ∈ S}`.
    pub fn permute_vertices(&self, perm: &[usize]) -> Result<SubsetVector> {
        check_permutation(perm, self.n_vertices)?;
        let mut out = vec![0.0; self.coeffs.len()];
        for (m, &c) in self.coeffs.iter().enumerate() {
            out[permute_mask(m as u32, perm) as usize] = c;
        }
        Ok(SubsetVector { n_vertices: self.n_vertices, coeffs: out })
    }

    /// `{"n_vertices": N, "coeffs": [...]}` with coefficients in mask order.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n_vertices: usize,
            coeffs: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        Self::from_coeffs(raw.n_vertices, raw.coeffs)
    }

    /// CSV rows `mask,cardinality,coefficient`, one per subset.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mask,cardinality,coefficient")?;
        for (m, c) in self.coeffs.iter().enumerate() {
            writeln!(w, "{m},{},{c:e}", m.count_ones())?;
        }
        Ok(())
    }
}

/// Coefficients of one fixed-cardinality sector, ordered by increasing mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorVector {
    n_vertices: usize,
    n: usize,
    entries: Vec<f64>,
}

impl SectorVector {
    pub fn zeros(n_vertices: usize, n: usize) -> Result<Self> {
        check_vertex_count(n_vertices)?;
        if n > n_vertices {
            return Err(Error::arg(format!("sector {n} out of range for {n_vertices} vertices")));
        }
        Ok(SectorVector { n_vertices, n, entries: vec![0.0; binomial(n_vertices, n)] })
    }

    pub fn from_entries(n_vertices: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        let mut v = Self::zeros(n_vertices, n)?;
        if entries.len() != v.entries.len() {
            return Err(Error::arg(format!(
                "sector {n} of {n_vertices} vertices has {} entries, got {}",
                v.entries.len(),
                entries.len()
            )));
        }
        v.entries = entries;
        Ok(v)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Spin-wave number.
    pub fn sector(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn masks(&self) -> Vec<u32> {
        sector_masks(self.n_vertices, self.n)
    }

    pub fn get(&self, s: SubsetId) -> Option<f64> {
        if s.cardinality() != self.n || s.index() >> self.n_vertices != 0 {
            return None;
        }
        Some(self.entries[sector_rank(s.bits())])
    }

    /// Place the sector back into a full subset vector, zero elsewhere.
    pub fn embed(&self) -> SubsetVector {
        let mut coeffs = vec![0.0; 1 << self.n_vertices];
        for (m, &e) in sector_masks(self.n_vertices, self.n).into_iter().zip(&self.entries) {
            coeffs[m as usize] = e;
        }
        SubsetVector { n_vertices: self.n_vertices, coeffs }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &SectorVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_vertex_count(n: usize) -> Result<()> {
    if n > MAX_VERTICES {
        return Err(Error::Size { what: "vertex count", actual: n, limit: MAX_VERTICES });
    }
    Ok(())
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::arg(format!("permutation has {} entries, expected {n}", perm.len())));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::arg(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

pub(crate) fn permute_mask(mask: u32, perm: &[usize]) -> u32 {
    SubsetId(mask).vertices().fold(0, |acc, v| acc | 1 << perm[v])
}

/// In-place superset sums: one sweep per coordinate, `O(N 2^N)`.
pub(crate) fn superset_sums(xs: &mut [f64]) {
    let mut bit = 1;
    while bit < xs.len() {
        for block in xs.chunks_exact_mut(bit * 2) {
            let (lo, hi) = block.split_at_mut(bit);
            for (z, o) in lo.iter_mut().zip(hi.iter()) {
                *z += *o;
            }
        }
        bit <<= 1;
    }
}

pub(crate) fn inv_superset_sums(xs: &mut [f64]) {
    let mut bit = 1;
    while bit < xs.len() {
        for block in xs.chunks_exact_mut(bit * 2) {
            let (lo, hi) = block.split_at_mut(bit);
            for (z, o) in lo.iter_mut().zip(hi.iter()) {
                *z -= *o;
            }
        }
        bit <<= 1;
    }
}
