//! Polymer expansion of a normalized subset-indexed wave function.
//!
//! Given `f` with `Σ_S f(S) = 1`, the superset sums `c(S) = Σ_{T ⊇ S} f(T)`
//! determine unique polymer weights `u` through
//!
//! ```text
//! c(S) = Σ_{partitions P of S} Π_{B ∈ P} u(B)
//! ```
//!
//! where `u({i}) = φ_i`. Conversely `f` is recovered as a sum over partitions
//! of the whole vertex set, singleton blocks contributing `(φ_i, 1 - φ_i)` and
//! larger blocks `u(B)` times `(1, -1)` on each of their sites.
//!
//! Both directions use the fixed-element recurrence: with `x` the lowest
//! vertex of `S`, `c(S) = Σ_{x ∈ B ⊆ S} u(B) c(S \ B)`. Every proper submask
//! of a mask is numerically smaller, so one ascending pass suffices. The
//! cost is `O(3^N)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SubsetId;
use crate::state::{check_permutation, permute_mask, SubsetVector};

/// Vertex cap for the `O(3^N)` recurrences.
pub const POLYMER_MAX_VERTICES: usize = 20;

/// Largest set whose partitions [`count_partitions`] will count.
pub const COUNT_MAX_ELEMENTS: usize = 12;

/// `f` counts as normalized when `|Σ f - 1|` is at most this.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Solved polymer weights: `φ_i` for singletons, `u(B)` for `|B| ≥ 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolymerCoefficients {
    n_vertices: usize,
    phi: Vec<f64>,
    /// Dense over masks; entries with cardinality below 2 are zero.
    u: Vec<f64>,
}

impl PolymerCoefficients {
    pub fn new(phi: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        let n = phi.len();
        check_polymer_size(n)?;
        if u.len() != 1 << n {
            return Err(Error::arg(format!("polymer table needs {} entries, got {}", 1usize << n, u.len())));
        }
        if let Some(m) = (0..u.len()).find(|&m| m.count_ones() < 2 && u[m] != 0.0) {
            return Err(Error::arg(format!("polymer weight given for mask {m} of cardinality below 2")));
        }
        Ok(PolymerCoefficients { n_vertices: n, phi, u })
    }

    /// All `φ_i` given, no multi-site polymers.
    pub fn product(phi: Vec<f64>) -> Result<Self> {
        let n = phi.len();
        check_polymer_size(n)?;
        Ok(PolymerCoefficients { n_vertices: n, phi, u: vec![0.0; 1 << n] })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Unified weight: `φ_i` on singletons, `u(S)` for `|S| ≥ 2`, zero on `∅`.
    pub fn get(&self, s: SubsetId) -> f64 {
        match s.cardinality() {
            0 => 0.0,
            1 => self.phi[s.bits().trailing_zeros() as usize],
            _ => self.u[s.index()],
        }
    }

    pub fn set_polymer(&mut self, s: SubsetId, value: f64) -> Result<()> {
        if s.cardinality() < 2 || s.index() >= self.u.len() {
            return Err(Error::arg(format!("{s} is not a multi-site polymer of this lattice")));
        }
        self.u[s.index()] = value;
        Ok(())
    }

    /// `(mask, u)` for every set of cardinality at least 2.
    pub fn polymers(&self) -> impl Iterator<Item = (SubsetId, f64)> + '_ {
        self.u
            .iter()
            .enumerate()
            .filter(|(m, _)| m.count_ones() >= 2)
            .map(|(m, &v)| (SubsetId(m as u32), v))
    }

    /// Largest `|u(B)|` over multi-site polymers.
    pub fn max_abs_polymer(&self) -> f64 {
        self.polymers().fold(0.0, |a, (_, v)| a.max(v.abs()))
    }

    /// Largest `|φ_i|` or `|u(B)|`.
    pub fn max_abs_weight(&self) -> f64 {
        self.phi.iter().fold(self.max_abs_polymer(), |a, v| a.max(v.abs()))
    }

    /// Unified weights as a dense mask-indexed array.
    fn unified(&self) -> Vec<f64> {
        let mut w = self.u.clone();
        for (i, &p) in self.phi.iter().enumerate() {
            w[1 << i] = p;
        }
        w
    }

    /// Relabel vertices by `perm`: the weight of `B` moves to `perm(B)`.
    pub fn permute_vertices(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_vertices)?;
        let mut phi = vec![0.0; self.n_vertices];
        for (i, &p) in self.phi.iter().enumerate() {
            phi[perm[i]] = p;
        }
        let mut u = vec![0.0; self.u.len()];
        for (m, &v) in self.u.iter().enumerate() {
            u[permute_mask(m as u32, perm) as usize] = v;
        }
        Ok(PolymerCoefficients { n_vertices: self.n_vertices, phi, u })
    }

    /// Largest absolute difference over all weights.
    pub fn max_abs_diff(&self, other: &PolymerCoefficients) -> f64 {
        let a = self.unified();
        let b = other.unified();
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// A set partition into disjoint nonempty blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetPartition {
    pub blocks: Vec<SubsetId>,
}

impl SetPartition {
    pub fn new(blocks: Vec<SubsetId>) -> Self {
        SetPartition { blocks }
    }

    /// At least two blocks.
    pub fn is_proper(&self) -> bool {
        self.blocks.len() >= 2
    }

    /// Union of the blocks, or `None` if they overlap or one is empty.
    pub fn union(&self) -> Option<SubsetId> {
        let mut acc = 0u32;
        for b in &self.blocks {
            if b.0 == 0 || acc & b.0 != 0 {
                return None;
            }
            acc |= b.0;
        }
        Some(SubsetId(acc))
    }

    pub fn is_partition_of(&self, s: SubsetId) -> bool {
        self.union() == Some(s)
    }
}

fn check_polymer_size(n: usize) -> Result<()> {
    if n > POLYMER_MAX_VERTICES {
        return Err(Error::Size {
            what: "vertex count for the polymer recurrence",
            actual: n,
            limit: POLYMER_MAX_VERTICES,
        });
    }
    Ok(())
}

/// `c(S) = Σ_{T ⊇ S} f(T)`; requires `Σ f = 1`.
pub fn compute_c(f: &SubsetVector) -> Result<SubsetVector> {
    let sum = f.total_sum();
    if sum.is_nan() || (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::DegenerateNormalization { sum });
    }
    Ok(f.superset_zeta())
}

/// Solve for the polymer weights from superset sums `c` with `c(∅) = 1`.
pub fn solve_u(c: &SubsetVector) -> Result<PolymerCoefficients> {
    let n = c.n_vertices();
    check_polymer_size(n)?;
    let c0 = c.get(SubsetId::EMPTY);
    if c0.is_nan() || (c0 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::arg(format!("c(∅) must be 1, got {c0}")));
    }
    let c = c.coeffs();
    let mut w = vec![0.0; c.len()];
    for s in 1..c.len() {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        // proper submasks r of rest, with block low|r and remainder rest^r
        let mut acc = 0.0;
        let mut r = rest;
        while r != 0 {
            r = (r - 1) & rest;
            acc += w[low | r] * c[rest ^ r];
        }
        w[s] = c[s] - acc;
    }
    let phi = (0..n).map(|i| w[1 << i]).collect();
    for i in 0..n {
        w[1 << i] = 0.0;
    }
    Ok(PolymerCoefficients { n_vertices: n, phi, u: w })
}

/// Superset sums generated by the weights: the inverse of [`solve_u`].
pub fn rebuild_c(p: &PolymerCoefficients) -> SubsetVector {
    let w = p.unified();
    let mut c = vec![0.0; w.len()];
    c[0] = 1.0;
    for s in 1..w.len() {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut acc = w[s];
        let mut r = rest;
        while r != 0 {
            r = (r - 1) & rest;
            acc += w[low | r] * c[rest ^ r];
        }
        c[s] = acc;
    }
    SubsetVector::from_coeffs(p.n_vertices, c).expect("finite weights give finite sums")
}

/// Wave function coefficients of the polymer expansion.
pub fn reconstruct_f(p: &PolymerCoefficients) -> SubsetVector {
    rebuild_c(p).superset_mobius()
}

/// Drop every polymer with more than `k_max` sites.
pub fn truncate(p: &PolymerCoefficients, k_max: usize) -> Result<PolymerCoefficients> {
    if k_max == 0 {
        return Err(Error::arg("k_max must be at least 1"));
    }
    let mut out = p.clone();
    for (m, v) in out.u.iter_mut().enumerate() {
        if m.count_ones() as usize > k_max {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Number of set partitions of `s` (the Bell number of `|s|`).
pub fn count_partitions(s: SubsetId) -> Result<u64> {
    let k = s.cardinality();
    if k > COUNT_MAX_ELEMENTS {
        return Err(Error::Size { what: "set size for partition counting", actual: k, limit: COUNT_MAX_ELEMENTS });
    }
    Ok(bell(k))
}

/// Bell numbers via the Bell triangle.
fn bell(k: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

/// Full pipeline `f → c → u`.
pub fn decompose(f: &SubsetVector) -> Result<PolymerCoefficients> {
    solve_u(&compute_c(f)?)
}

/// Error of a truncated expansion against the full one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub k_max: usize,
    pub l1_error: f64,
    pub linf_error: f64,
    pub rel_l2_error: f64,
}

/// Errors of `reconstruct_f(truncate(p, k))` against `reconstruct_f(p)` for
/// `k = 1..=N`. The `k = N` row compares the reference with itself.
pub fn truncation_errors(p: &PolymerCoefficients) -> Result<Vec<TruncationRow>> {
    let reference = reconstruct_f(p);
    let ref_l2 = reference.coeffs().iter().map(|x| x * x).sum::<f64>().sqrt();
    (1..=p.n_vertices.max(1))
        .map(|k| {
            let approx = reconstruct_f(&truncate(p, k)?);
            let diffs = || reference.coeffs().iter().zip(approx.coeffs()).map(|(a, b)| (a - b).abs());
            let l2 = diffs().map(|d| d * d).sum::<f64>().sqrt();
            Ok(TruncationRow {
                k_max: k,
                l1_error: diffs().sum(),
                linf_error: diffs().fold(0.0, f64::max),
                rel_l2_error: if ref_l2 > 0.0 { l2 / ref_l2 } else { l2 },
            })
        })
        .collect()
}

/// Independent-site state `f(S) = Π_{i∈S} p_i Π_{j∉S} (1 - p_j)`.
pub fn product_state(p: &[f64]) -> Result<SubsetVector> {
    let n = p.len();
    let mut f = SubsetVector::zeros(n)?;
    for (m, slot) in f.coeffs_mut().iter_mut().enumerate() {
        *slot = p
            .iter()
            .enumerate()
            .map(|(i, &pi)| if m >> i & 1 == 1 { pi } else { 1.0 - pi })
            .product();
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_to, Method, DEFAULT_DT};
    use crate::lattice::{Boundary, Lattice};
    use crate::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_normalized(n: usize, seed: u64) -> SubsetVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = SubsetVector::from_coeffs(n, (0..1 << n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        raw.normalize().unwrap()
    }

    #[test]
    fn c_two_sites() {
        let (a, b, c) = (0.2, 0.3, 0.5);
        let f = SubsetVector::from_coeffs(2, vec![0.0, a, b, c]).unwrap();
        let cc = compute_c(&f).unwrap();
        assert!((cc.get(SubsetId(1)) - (a + c)).abs() < 1e-15);
        assert_eq!(cc.get(SubsetId(3)), c);
        assert!((cc.get(SubsetId::EMPTY) - 1.0).abs() < 1e-15);

        let full = SubsetVector::indicator(5, SubsetId::full(5)).unwrap();
        assert!(compute_c(&full).unwrap().coeffs().iter().all(|&x| x == 1.0));
        let bad = SubsetVector::from_coeffs(2, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(compute_c(&bad), Err(Error::DegenerateNormalization { .. })));
    }

    #[test]
    fn u_two_sites_by_hand() {
        let f = SubsetVector::from_coeffs(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = compute_c(&f).unwrap();
        let p = solve_u(&c).unwrap();
        let (phi0, phi1) = (c.get(SubsetId(1)), c.get(SubsetId(2)));
        assert_eq!(p.phi(), &[phi0, phi1]);
        assert!((p.get(SubsetId(3)) - (c.get(SubsetId(3)) - phi0 * phi1)).abs() < 1e-15);
    }

    #[test]
    fn reconstruct_two_sites_by_hand() {
        let (p0, p1, u01) = (0.3, 0.6, 0.05);
        let mut p = PolymerCoefficients::product(vec![p0, p1]).unwrap();
        p.set_polymer(SubsetId(3), u01).unwrap();
        let f = reconstruct_f(&p);
        let expect = [(1.0 - p0) * (1.0 - p1) + u01, p0 * (1.0 - p1) - u01, (1.0 - p0) * p1 - u01, p0 * p1 + u01];
        for (got, want) in f.coeffs().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn evolved_two_site_state() {
        let lat = Lattice::new(&[2], Boundary::Open).unwrap();
        let f0 = SubsetVector::indicator(2, SubsetId(1)).unwrap();
        let f = evolve_to(&lat, &f0, 0.5, Method::ExactExpm, DEFAULT_DT).unwrap();
        let p = decompose(&f).unwrap();
        // f({0,1}) stays 0, so c({0,1}) = 0 and u = -φ0 φ1
        let e = (-1.0f64).exp();
        assert!((p.phi()[0] - (1.0 + e) / 2.0).abs() < 1e-12);
        assert!((p.phi()[1] - (1.0 - e) / 2.0).abs() < 1e-12);
        assert!((p.get(SubsetId(3)) + p.phi()[0] * p.phi()[1]).abs() < 1e-15);
    }

    #[test]
    fn product_state_has_no_polymers() {
        let probs = [0.1, 0.35, 0.5, 0.8, 0.95, 0.2, 0.6];
        let f = product_state(&probs).unwrap();
        let p = decompose(&f).unwrap();
        assert!(p.max_abs_polymer() <= 1e-12);
        for (a, b) in p.phi().iter().zip(probs) {
            assert!((a - b).abs() < 1e-14);
        }
        let g = reconstruct_f(&PolymerCoefficients::product(probs.to_vec()).unwrap());
        assert!(g.max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<u64> = (0..=12).map(|k| count_partitions(SubsetId((1u32 << k) - 1)).unwrap()).collect();
        assert_eq!(counts[1], 1);
        assert_eq!(counts[3], 5);
        assert_eq!(counts[8], 4140);
        assert_eq!(counts[12], 4_213_597);
        for (k, &count) in counts.iter().enumerate().take(10) {
            let set = SubsetId((1u32 << k) - 1);
            assert_eq!(oracle::enumerate_partitions(set).unwrap().count() as u64, count);
        }
        assert!(matches!(count_partitions(SubsetId((1 << 13) - 1)), Err(Error::Size { .. })));
    }

    #[test]
    fn truncation_edges() {
        let f = random_normalized(5, 3);
        let p = decompose(&f).unwrap();
        assert_eq!(truncate(&p, 5).unwrap(), p);
        assert_eq!(truncate(&p, 9).unwrap(), p);
        let k1 = truncate(&p, 1).unwrap();
        assert_eq!(k1.max_abs_polymer(), 0.0);
        assert_eq!(k1.phi(), p.phi());
        assert!(truncate(&p, 0).is_err());
        let rows = truncation_errors(&p).unwrap();
        assert_eq!(rows.len(), 5);
        let last = rows.last().unwrap();
        assert_eq!((last.l1_error, last.linf_error, last.rel_l2_error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn solve_and_reconstruct_match_oracles() {
        for n in 1..=7 {
            let f = random_normalized(n, 100 + n as u64);
            let c = compute_c(&f).unwrap();
            let p = solve_u(&c).unwrap();
            let naive = oracle::solve_u_by_partitions(c.coeffs()).unwrap();
            for (m, &w) in naive.iter().enumerate() {
                assert!((p.get(SubsetId(m as u32)) - w).abs() <= 1e-12, "n={n} mask={m}");
            }
            let literal = oracle::reconstruct_by_partitions(&naive).unwrap();
            let fast = reconstruct_f(&p);
            for (a, b) in fast.coeffs().iter().zip(&literal) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn solve_u_checks() {
        let c = SubsetVector::from_coeffs(1, vec![0.5, 0.5]).unwrap();
        assert!(matches!(solve_u(&c), Err(Error::Argument(_))));
        let big = SubsetVector::zeros(21).unwrap();
        assert!(matches!(solve_u(&big), Err(Error::Size { .. })));
    }

    #[test]
    fn set_partition_flags() {
        let p = SetPartition::new(vec![SubsetId(0b001), SubsetId(0b110)]);
        assert!(p.is_proper());
        assert!(p.is_partition_of(SubsetId(0b111)));
        assert!(!SetPartition::new(vec![SubsetId(0b111)]).is_proper());
        assert_eq!(SetPartition::new(vec![SubsetId(0b011), SubsetId(0b110)]).union(), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn roundtrip_f_c_u_f(n in 1usize..=9, seed: u64) {
            let f = random_normalized(n, seed);
            let back = reconstruct_f(&decompose(&f).unwrap());
            prop_assert!(back.max_abs_diff(&f) <= 1e-10 * f.max_abs());
        }

        #[test]
        fn order_independent(seed: u64) {
            let n = 7;
            let f = random_normalized(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let direct = decompose(&f).unwrap();
            let relabeled = decompose(&f.permute_vertices(&perm).unwrap()).unwrap();
            let mut inverse = vec![0; n];
            for (i, &p) in perm.iter().enumerate() {
                inverse[p] = i;
            }
            let back = relabeled.permute_vertices(&inverse).unwrap();
            prop_assert!(back.max_abs_diff(&direct) <= 1e-12);
        }
    }
}
