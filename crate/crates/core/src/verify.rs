//! Identity battery run on random states of one lattice.
//!
//! Residuals are max-abs differences divided by the larger of the input and
//! output magnitudes, so the operators that sum many terms are judged on
//! the scale they produce.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Method, DEFAULT_DT, EXACT_MAX_VERTICES};
use crate::error::{Error, Result};
use crate::init::random_state;
use crate::intertwiners::{
    self, apply_t, check_composition, check_heat_split, check_intertwining, composition_factor, IntertwinerSpec,
};
use crate::lattice::{Lattice, SubsetId};
use crate::polymer::{self, POLYMER_MAX_VERTICES};
use crate::state::{binomial, SectorVector, SubsetVector};
use crate::tolerances::{self, relative};

/// Largest lattice on which the battery runs the polymer checks. Beyond it
/// the Möbius step loses more than the roundtrip tolerance in double
/// precision for generic states.
pub const VERIFY_POLYMER_MAX_VERTICES: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Time used by the evolution-based checks.
    pub t: f64,
    pub dt: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { trials: 5, seed: 1, t: 1.0, dt: DEFAULT_DT }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sizes {
    pub n_vertices: usize,
    pub cases: usize,
}

/// One line of the verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub identity: String,
    pub lattice: String,
    pub sizes: Sizes,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub results: Vec<IdentityResult>,
    pub skipped: Vec<String>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

struct Recorder<'a> {
    lattice: String,
    n: usize,
    results: &'a mut Vec<IdentityResult>,
}

impl Recorder<'_> {
    fn push(&mut self, identity: &str, cases: usize, residual: f64, tolerance: f64) {
        self.results.push(IdentityResult {
            identity: identity.to_owned(),
            lattice: self.lattice.clone(),
            sizes: Sizes { n_vertices: self.n, cases },
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }
}

pub fn random_sector(n: usize, r: usize, rng: &mut ChaCha8Rng) -> SectorVector {
    let entries = (0..binomial(n, r)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SectorVector::from_entries(n, r, entries).expect("length matches the sector")
}

fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn inverse_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &q) in p.iter().enumerate() {
        inv[q] = i;
    }
    inv
}

/// A uniformly random `k`-subset of `0..n`.
fn random_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> SubsetId {
    let verts: Vec<usize> = (0..n).collect();
    SubsetId::from_vertices(verts.choose_multiple(rng, k).copied())
}

fn evolution_method(n: usize) -> Method {
    if n <= EXACT_MAX_VERTICES {
        Method::ExactExpm
    } else {
        Method::Rk4
    }
}

/// Run every identity check on `lat`.
pub fn run_battery(lat: &Lattice, opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.trials == 0 {
        return Err(Error::arg("at least one trial is required"));
    }
    let n = lat.n_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    let mut rec = Recorder { lattice: lat.label(), n, results: &mut results };
    let method = evolution_method(n);

    // T^{s,k} T^{r,s} = C(r-k, s-k) T^{r,k}
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..opts.trials {
        for r in 0..=n {
            let g = random_sector(n, r, &mut rng);
            for s in 0..r {
                for k in 0..s {
                    let direct = apply_t(IntertwinerSpec::new(r, k), &g)?.max_abs() * composition_factor(r, s, k);
                    worst = worst.max(relative(check_composition(r, s, k, &g)?, g.max_abs().max(direct)));
                    cases += 1;
                }
            }
        }
    }
    rec.push("composition", cases, worst, tolerances::ALGEBRAIC);

    // T H = H T for every s <= r
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..opts.trials {
        for r in 0..=n {
            let g = random_sector(n, r, &mut rng);
            for s in 0..=r {
                let mapped = apply_t(IntertwinerSpec::new(r, s), &dynamics::apply_hamiltonian_sector(lat, &g)?)?;
                worst = worst.max(relative(check_intertwining(lat, r, s, &g)?, g.max_abs().max(mapped.max_abs())));
                cases += 1;
            }
        }
    }
    rec.push("intertwining", cases, worst, tolerances::ALGEBRAIC);

    let mut worst = 0.0f64;
    let mut cases = 0;
    for r in 1..=n {
        let g = random_sector(n, r, &mut rng);
        let res = intertwiners::check_intertwining_evolved(lat, r, r - 1, &g, opts.t, method, opts.dt)?;
        worst = worst.max(relative(res, g.max_abs()));
        cases += 1;
    }
    rec.push("intertwining_evolved", cases, worst, tolerances::INTEGRATOR);

    // heat-equation split at fixed (r-1)-sets
    let (mut worst_i1, mut worst_i2) = (0.0f64, 0.0f64);
    let mut cases = 0;
    if n >= 1 {
        for _ in 0..opts.trials.max(10) {
            let r = rng.gen_range(1..=n);
            let f = random_sector(n, r, &mut rng);
            let s = random_subset(n, r - 1, &mut rng);
            let split = check_heat_split(lat, s, &f)?;
            worst_i1 = worst_i1.max(relative(split.i1_residual(), f.max_abs()));
            worst_i2 = worst_i2.max(relative(split.i2.abs(), f.max_abs()));
            cases += 1;
        }
    }
    rec.push("heat_split_i1", cases, worst_i1, tolerances::ALGEBRAIC);
    rec.push("heat_split_i2", cases, worst_i2, tolerances::ALGEBRAIC);

    let mut worst = 0.0f64;
    for _ in 0..opts.trials {
        let v = signed_random(n, &mut rng)?;
        let scale = v.max_abs();
        worst = worst
            .max(relative(v.superset_zeta().superset_mobius().max_abs_diff(&v), scale))
            .max(relative(v.superset_mobius().superset_zeta().max_abs_diff(&v), scale));
    }
    rec.push("zeta_mobius_roundtrip", opts.trials, worst, tolerances::ALGEBRAIC);

    // Σ f conserved by the evolution
    let mut worst = 0.0f64;
    for _ in 0..opts.trials {
        let f = random_state(n, rng.gen())?;
        let g = dynamics::evolve_to(lat, &f, opts.t, method, opts.dt)?;
        worst = worst.max((g.total_sum() - f.total_sum()).abs());
    }
    rec.push("conservation", opts.trials, worst, tolerances::CONSERVATION);

    if n <= EXACT_MAX_VERTICES {
        let mut worst = 0.0f64;
        for sector in 0..=n {
            let m = dynamics::sector_hamiltonian(lat, sector)?;
            worst = worst.max((&m - m.transpose()).amax());
        }
        rec.push("hamiltonian_symmetry", n + 1, worst, 0.0);
    } else {
        skipped.push("hamiltonian_symmetry".to_owned());
    }

    // zero-sum states cannot be normalized
    let mut zero = SubsetVector::zeros(n)?;
    zero.coeffs_mut()[0] = 1.0;
    zero.coeffs_mut()[lat.n_subsets() - 1] -= 1.0;
    let rejected = matches!(zero.normalize(), Err(Error::DegenerateNormalization { .. }))
        && matches!(polymer::compute_c(&zero), Err(Error::DegenerateNormalization { .. }));
    rec.push("degenerate_normalization_rejected", 1, if rejected { 0.0 } else { 1.0 }, 0.0);

    if n > VERIFY_POLYMER_MAX_VERTICES.min(POLYMER_MAX_VERTICES) {
        skipped.extend(
            ["polymer_roundtrip", "sector_consistency", "order_independence", "c_heat_equation", "product_state", "correlation_detected"]
                .map(String::from),
        );
        return Ok(VerifyReport { options: opts.clone(), results, skipped });
    }

    // f -> c -> u -> f, and the sector-by-sector view of the same match
    let (mut worst, mut worst_sector) = (0.0f64, 0.0f64);
    for _ in 0..opts.trials {
        let f = random_state(n, rng.gen())?;
        let back = polymer::reconstruct_f(&polymer::decompose(&f)?);
        worst = worst.max(relative(back.max_abs_diff(&f), f.max_abs()));
        for sector in (0..=n).rev() {
            let a = f.sector_project(sector)?;
            let b = back.sector_project(sector)?;
            worst_sector = worst_sector.max(relative(a.max_abs_diff(&b), f.max_abs()));
        }
    }
    rec.push("polymer_roundtrip", opts.trials, worst, tolerances::ROUNDTRIP);
    rec.push("sector_consistency", opts.trials * (n + 1), worst_sector, tolerances::ROUNDTRIP);

    let mut worst = 0.0f64;
    let f = random_state(n, rng.gen())?;
    let direct = polymer::decompose(&f)?;
    let scale = direct.max_abs_weight().max(1.0);
    for _ in 0..opts.trials {
        let perm = random_permutation(n, &mut rng);
        let relabeled = polymer::decompose(&f.permute_vertices(&perm)?)?;
        let back = relabeled.permute_vertices(&inverse_permutation(&perm))?;
        worst = worst.max(relative(back.max_abs_diff(&direct), scale));
    }
    rec.push("order_independence", opts.trials, worst, tolerances::ALGEBRAIC);

    // c-slices obey the heat equation: evolve-then-c equals c-then-evolve
    let mut worst = 0.0f64;
    for _ in 0..opts.trials {
        let f = random_state(n, rng.gen())?;
        let a = polymer::compute_c(&dynamics::evolve_to(lat, &f, opts.t, method, opts.dt)?)?;
        let b = dynamics::evolve_to(lat, &polymer::compute_c(&f)?, opts.t, method, opts.dt)?;
        worst = worst.max(a.max_abs_diff(&b));
    }
    rec.push("c_heat_equation", opts.trials, worst, tolerances::INTEGRATOR);

    let (mut worst, mut weakest) = (0.0f64, f64::INFINITY);
    for _ in 0..opts.trials {
        let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let f = polymer::product_state(&probs)?;
        worst = worst.max(polymer::decompose(&f)?.max_abs_polymer());
        if n >= 2 {
            // a bump of δ at f(A) moves u({i,j}) by about δ (1_A(i) - φ_i)(1_A(j) - φ_j)
            let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..0.8)).collect();
            let mut g = polymer::product_state(&probs)?;
            g.coeffs_mut()[lat.n_subsets() - 1] += 1e-3;
            let g = g.normalize()?;
            weakest = weakest.min(polymer::decompose(&g)?.max_abs_polymer());
        }
    }
    rec.push("product_state", opts.trials, worst, tolerances::ALGEBRAIC);
    if n >= 2 {
        // pass iff every perturbed state shows a polymer above the threshold
        rec.results.push(IdentityResult {
            identity: "correlation_detected".to_owned(),
            lattice: rec.lattice.clone(),
            sizes: Sizes { n_vertices: n, cases: opts.trials },
            residual: weakest,
            tolerance: tolerances::CORRELATION_DETECT,
            pass: weakest > tolerances::CORRELATION_DETECT,
        });
    } else {
        skipped.push("correlation_detected".to_owned());
    }

    Ok(VerifyReport { options: opts.clone(), results, skipped })
}

fn signed_random(n: usize, rng: &mut ChaCha8Rng) -> Result<SubsetVector> {
    SubsetVector::from_coeffs(n, (0..1usize << n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}
