//! Superset-sum maps between spin-wave sectors and checks of the identities
//! they satisfy.
//!
//! `T^{r,s}` sends a sector-`r` vector `g` to the sector-`s` vector
//! `h(S) = Σ_{S' ⊇ S, |S'| = r} g(S')` when `s < r`; it is the identity for
//! `s = r` and zero for `s > r`. It commutes with the Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Method};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, SubsetId};
use crate::state::{binomial, SectorVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntertwinerSpec {
    pub r: usize,
    pub s: usize,
}

impl IntertwinerSpec {
    pub fn new(r: usize, s: usize) -> Self {
        IntertwinerSpec { r, s }
    }
}

/// Apply `T^{r,s}` without materializing it: embed, superset-sum, project.
pub fn apply_t(spec: IntertwinerSpec, g: &SectorVector) -> Result<SectorVector> {
    let n = g.n_vertices();
    if g.sector() != spec.r {
        return Err(Error::arg(format!(
            "T^{{{},{}}} expects a sector-{} vector, got sector {}",
            spec.r,
            spec.s,
            spec.r,
            g.sector()
        )));
    }
    if spec.s > n {
        return Err(Error::arg(format!("target sector {} out of range for {n} vertices", spec.s)));
    }
    match spec.s.cmp(&spec.r) {
        std::cmp::Ordering::Equal => Ok(g.clone()),
        std::cmp::Ordering::Greater => SectorVector::zeros(n, spec.s),
        std::cmp::Ordering::Less => g.embed().superset_zeta().sector_project(spec.s),
    }
}

/// `(r-k)! / ((s-k)! (r-s)!)`, the factor in `T^{s,k} T^{r,s} = c T^{r,k}`.
pub fn composition_factor(r: usize, s: usize, k: usize) -> f64 {
    binomial(r - k, s - k) as f64
}

/// Max-abs residual of `T^{s,k} T^{r,s} g - factor · T^{r,k} g`.
pub fn check_composition(r: usize, s: usize, k: usize, g: &SectorVector) -> Result<f64> {
    if !(r > s && s > k) {
        return Err(Error::arg(format!("composition needs r > s > k, got ({r}, {s}, {k})")));
    }
    let two_step = apply_t(IntertwinerSpec::new(s, k), &apply_t(IntertwinerSpec::new(r, s), g)?)?;
    let mut direct = apply_t(IntertwinerSpec::new(r, k), g)?;
    let factor = composition_factor(r, s, k);
    direct.entries_mut().iter_mut().for_each(|x| *x *= factor);
    Ok(two_step.max_abs_diff(&direct))
}

/// Max-abs residual of `T^{r,s} H g - H T^{r,s} g`.
pub fn check_intertwining(lat: &Lattice, r: usize, s: usize, g: &SectorVector) -> Result<f64> {
    check_lattice(lat, g)?;
    let spec = IntertwinerSpec::new(r, s);
    let lhs = apply_t(spec, &dynamics::apply_hamiltonian_sector(lat, g)?)?;
    let rhs = dynamics::apply_hamiltonian_sector(lat, &apply_t(spec, g)?)?;
    Ok(lhs.max_abs_diff(&rhs))
}

/// Time-domain form: `T^{r,s} e^{-Ht} g` against `e^{-Ht} T^{r,s} g`.
pub fn check_intertwining_evolved(
    lat: &Lattice,
    r: usize,
    s: usize,
    g: &SectorVector,
    t: f64,
    method: Method,
    dt: f64,
) -> Result<f64> {
    check_lattice(lat, g)?;
    let spec = IntertwinerSpec::new(r, s);
    if g.sector() != r {
        return Err(Error::arg(format!("expected a sector-{r} vector, got sector {}", g.sector())));
    }
    let lhs = apply_t(spec, &dynamics::evolve_sector(lat, g, t, method, dt)?)?;
    let rhs = dynamics::evolve_sector(lat, &apply_t(spec, g)?, t, method, dt)?;
    Ok(lhs.max_abs_diff(&rhs))
}

fn check_lattice(lat: &Lattice, g: &SectorVector) -> Result<()> {
    if g.n_vertices() != lat.n_vertices() {
        return Err(Error::arg(format!(
            "sector vector has {} vertices, lattice {} has {}",
            g.n_vertices(),
            lat.label(),
            lat.n_vertices()
        )));
    }
    Ok(())
}

/// The two pieces of the summed heat equation at a fixed `(r-1)`-set `s`,
/// plus the heat-equation right-hand side of `g(x) = Σ_{j ∉ x} f(x ∪ j)`
/// at `s`, computed independently.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatSplit {
    /// Moves of an element of `s`, the added vertex held fixed.
    pub i1: f64,
    /// Moves of the added vertex, `s` held fixed. Cancels pairwise.
    pub i2: f64,
    /// `Σ_{s'~s} (g(s') - g(s))`.
    pub g_heat: f64,
}

impl HeatSplit {
    pub fn i1_residual(&self) -> f64 {
        (self.i1 - self.g_heat).abs()
    }
}

/// Split `Σ_{i ∉ s} Σ_{S'~(s∪i)} (f(S') - f(s∪i))` into the two sums.
///
/// A neighbour of `s ∪ i` either moves an element of `s` (giving `s' ∪ i`
/// with `s' ~ s` and `i ∉ s'`) or moves `i` itself to some `j ~ i`,
/// `j ∉ s`. Pairs with `i ∈ s'` are not disjoint unions and do not occur.
pub fn check_heat_split(lat: &Lattice, s: SubsetId, f: &SectorVector) -> Result<HeatSplit> {
    check_lattice(lat, f)?;
    lat.check_subset(s)?;
    let r = f.sector();
    if r == 0 || s.cardinality() != r - 1 {
        return Err(Error::arg(format!(
            "set {s} must have cardinality {} for a sector-{r} vector",
            r.saturating_sub(1)
        )));
    }
    let n = lat.n_vertices();
    let at = |m: u32| f.get(SubsetId(m)).expect("cardinality r by construction");
    let outside: Vec<usize> = (0..n).filter(|&i| !s.contains(i)).collect();
    let s_nbrs = lat.subset_neighbors(s)?;

    let mut i1 = 0.0;
    for &i in &outside {
        let base = at(s.bits() | 1 << i);
        for sp in &s_nbrs {
            if !sp.contains(i) {
                i1 += at(sp.bits() | 1 << i) - base;
            }
        }
    }

    let mut i2 = 0.0;
    for &i in &outside {
        let base = at(s.bits() | 1 << i);
        for &j in lat.neighbors(i) {
            if !s.contains(j) {
                i2 += at(s.bits() | 1 << j) - base;
            }
        }
    }

    let g = |x: SubsetId| -> f64 {
        (0..n).filter(|&j| !x.contains(j)).map(|j| at(x.bits() | 1 << j)).sum()
    };
    let gs = g(s);
    let g_heat = s_nbrs.iter().map(|&sp| g(sp) - gs).sum();

    Ok(HeatSplit { i1, i2, g_heat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use crate::oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sector(n: usize, r: usize, rng: &mut ChaCha8Rng) -> SectorVector {
        let len = binomial(n, r);
        SectorVector::from_entries(n, r, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn t21_on_three_sites() {
        let (a, b, c) = (1.5, -2.0, 0.25);
        // sector-2 masks in order: {0,1}=3, {0,2}=5, {1,2}=6
        let g = SectorVector::from_entries(3, 2, vec![a, b, c]).unwrap();
        let h = apply_t(IntertwinerSpec::new(2, 1), &g).unwrap();
        assert_eq!(h.entries(), &[a + b, a + c, b + c]);
    }

    #[test]
    fn identity_and_zero_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_sector(5, 2, &mut rng);
        assert_eq!(apply_t(IntertwinerSpec::new(2, 2), &g).unwrap(), g);
        let up = apply_t(IntertwinerSpec::new(2, 4), &g).unwrap();
        assert_eq!(up.sector(), 4);
        assert!(up.entries().iter().all(|&x| x == 0.0));
        assert!(apply_t(IntertwinerSpec::new(3, 1), &g).is_err());
        assert!(apply_t(IntertwinerSpec::new(2, 6), &g).is_err());
    }

    #[test]
    fn composition_factors() {
        assert_eq!(composition_factor(3, 2, 1), 2.0);
        assert_eq!(composition_factor(2, 1, 0), 2.0);
        assert_eq!(composition_factor(5, 3, 1), 6.0);
        let g = SectorVector::zeros(4, 2).unwrap();
        assert!(check_composition(2, 2, 1, &g).is_err());
        assert!(check_composition(2, 1, 1, &g).is_err());
    }

    #[test]
    fn composition_n8() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random_sector(8, 4, &mut rng);
        assert!(check_composition(4, 2, 1, &g).unwrap() <= 1e-12 * g.max_abs());
    }

    #[test]
    fn dense_matrices_match_zeta_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=7 {
            for r in 0..=n {
                let g = random_sector(n, r, &mut rng);
                for s in 0..=n {
                    let dense = oracle::dense_intertwiner(n, r, s).unwrap();
                    let expect = dense.apply(g.entries());
                    let got = apply_t(IntertwinerSpec::new(r, s), &g).unwrap();
                    for (x, y) in got.entries().iter().zip(&expect) {
                        assert!((x - y).abs() <= 1e-12, "n={n} r={r} s={s}");
                    }
                }
            }
        }
    }

    #[test]
    fn intertwining_trivial_and_path() {
        let lat = Lattice::new(&[4], Boundary::Open).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_sector(4, 2, &mut rng);
        assert_eq!(check_intertwining(&lat, 2, 2, &g).unwrap(), 0.0);
        assert!(check_intertwining(&lat, 2, 1, &g).unwrap() <= 1e-12);
        assert!(check_intertwining(&lat, 2, 0, &g).unwrap() <= 1e-12);
    }

    #[test]
    fn intertwining_in_time() {
        let lat = Lattice::new(&[3, 2], Boundary::Open).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_sector(6, 2, &mut rng);
        let res = check_intertwining_evolved(&lat, 2, 1, &g, 1.0, Method::ExactExpm, 1e-3).unwrap();
        assert!(res <= 1e-8, "{res}");
    }

    #[test]
    fn heat_split_two_sites() {
        let lat = Lattice::new(&[2], Boundary::Open).unwrap();
        let f = SectorVector::from_entries(2, 2, vec![0.7]).unwrap();
        let split = check_heat_split(&lat, SubsetId(0b01), &f).unwrap();
        assert_eq!(split.i2, 0.0);
        assert_eq!(split.i1, 0.0);
        assert_eq!(split.g_heat, 0.0);
    }

    #[test]
    fn heat_split_path4() {
        let lat = Lattice::new(&[4], Boundary::Open).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let f = random_sector(4, 2, &mut rng);
        let split = check_heat_split(&lat, SubsetId(0b0010), &f).unwrap();
        assert!(split.i2.abs() <= 1e-12);
        assert!(split.i1_residual() <= 1e-12);
        // the full sum equals the heat rhs of g, where g = T^{2,1} f
        let g = apply_t(IntertwinerSpec::new(2, 1), &f).unwrap();
        let rhs = crate::dynamics::heat_rhs(&lat, &g.embed()).unwrap();
        assert!((split.i1 + split.i2 - rhs.get(SubsetId(0b0010))).abs() <= 1e-12);
        assert!(check_heat_split(&lat, SubsetId(0b0011), &f).is_err());
    }

    proptest! {
        #[test]
        fn intertwining_all_sector_pairs(seed: u64, periodic: bool) {
            let b = if periodic { Boundary::Periodic } else { Boundary::Open };
            let lat = Lattice::new(&[3, 2], b).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for r in 0..=6 {
                let g = random_sector(6, r, &mut rng);
                for s in 0..=r {
                    prop_assert!(check_intertwining(&lat, r, s, &g).unwrap() <= 1e-12 * 64.0);
                }
            }
        }

        #[test]
        fn t_is_linear(seed: u64, alpha in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_sector(7, 4, &mut rng);
            let b = random_sector(7, 4, &mut rng);
            let combo: Vec<f64> = a.entries().iter().zip(b.entries()).map(|(x, y)| alpha * x + y).collect();
            let combo = SectorVector::from_entries(7, 4, combo).unwrap();
            let spec = IntertwinerSpec::new(4, 2);
            let ta = apply_t(spec, &a).unwrap();
            let tb = apply_t(spec, &b).unwrap();
            let tc = apply_t(spec, &combo).unwrap();
            for ((x, y), z) in ta.entries().iter().zip(tb.entries()).zip(tc.entries()) {
                prop_assert!((alpha * x + y - z).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn t_commutes_with_translations() {
        let lat = Lattice::new(&[6], Boundary::Periodic).unwrap();
        let shift: Vec<usize> = (0..6).map(|v| (v + 1) % 6).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_sector(6, 3, &mut rng);
        let spec = IntertwinerSpec::new(3, 1);
        let moved = g.embed().permute_vertices(&shift).unwrap().sector_project(3).unwrap();
        let a = apply_t(spec, &moved).unwrap();
        let b = apply_t(spec, &g).unwrap().embed().permute_vertices(&shift).unwrap().sector_project(1).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-14);
        // and translation is a lattice symmetry
        for &(i, j) in lat.edges() {
            assert!(lat.are_adjacent(shift[i], shift[j]));
        }
    }
}
