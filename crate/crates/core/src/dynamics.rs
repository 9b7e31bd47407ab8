//! Hamiltonian action and time evolution `f(t) = e^{-Ht} f`.
//!
//! In the subset basis the Hamiltonian `H = -Σ_{i~j} (I_ij - 1)` acts as the
//! negative graph Laplacian of the subset graph, so the coefficients obey the
//! heat equation `∂f(S)/∂t = Σ_{S'~S} (f(S') - f(S))`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::state::{binomial, sector_masks, sector_rank, SectorVector, SubsetVector};

/// Vertex cap for evolution by sector diagonalization.
pub const EXACT_MAX_VERTICES: usize = 12;

pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Eigendecomposition of each sector Hamiltonian.
    #[default]
    ExactExpm,
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact_expm" => Ok(Method::ExactExpm),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::arg(format!("unknown evolution method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactExpm => "exact_expm",
            Method::Rk4 => "rk4",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub method: Method,
    pub dt: f64,
    /// Sample times; empty means only `t_final`.
    pub record_times: Vec<f64>,
}

impl EvolutionConfig {
    pub fn new(t_final: f64, method: Method) -> Self {
        EvolutionConfig { t_final, method, dt: DEFAULT_DT, record_times: Vec::new() }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_times(mut self, times: Vec<f64>) -> Self {
        self.record_times = times;
        self
    }

    fn validate(&self) -> Result<Vec<f64>> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::arg(format!("t_final must be finite and nonnegative, got {}", self.t_final)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::arg(format!("dt must be positive, got {}", self.dt)));
        }
        let mut times = if self.record_times.is_empty() {
            vec![self.t_final]
        } else {
            self.record_times.clone()
        };
        if let Some(&t) = times.iter().find(|&&t| !(0.0..=self.t_final).contains(&t)) {
            return Err(Error::arg(format!("record time {t} outside [0, {}]", self.t_final)));
        }
        times.sort_by(f64::total_cmp);
        Ok(times)
    }
}

fn check_size(lat: &Lattice, f: &SubsetVector) -> Result<()> {
    if f.n_vertices() != lat.n_vertices() {
        return Err(Error::arg(format!(
            "vector has {} vertices, lattice {} has {}",
            f.n_vertices(),
            lat.label(),
            lat.n_vertices()
        )));
    }
    Ok(())
}

/// Right-hand side of the graph heat equation.
pub fn heat_rhs(lat: &Lattice, f: &SubsetVector) -> Result<SubsetVector> {
    check_size(lat, f)?;
    let mut out = SubsetVector::zeros(lat.n_vertices())?;
    heat_rhs_into(lat, f.coeffs(), out.coeffs_mut());
    Ok(out)
}

/// Each lattice edge with exactly one endpoint in `S` connects `S` to the
/// set with that endpoint moved across the edge.
pub(crate) fn heat_rhs_into(lat: &Lattice, f: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for &(i, j) in lat.edges() {
        let flip = (1usize << i) | (1usize << j);
        for (m, slot) in out.iter_mut().enumerate() {
            if ((m >> i) ^ (m >> j)) & 1 == 1 {
                *slot += f[m ^ flip] - f[m];
            }
        }
    }
}

/// `(Hf)(S) = -Σ_{S'~S} (f(S') - f(S))`.
pub fn apply_hamiltonian(lat: &Lattice, f: &SubsetVector) -> Result<SubsetVector> {
    let mut out = heat_rhs(lat, f)?;
    out.coeffs_mut().iter_mut().for_each(|c| *c = -*c);
    Ok(out)
}

/// Hamiltonian applied to a single sector vector.
pub fn apply_hamiltonian_sector(lat: &Lattice, g: &SectorVector) -> Result<SectorVector> {
    let full = apply_hamiltonian(lat, &g.embed())?;
    full.sector_project(g.sector())
}

/// Dense matrix of `H` restricted to sector `n`, rows and columns ordered by
/// increasing mask.
pub fn sector_hamiltonian(lat: &Lattice, n: usize) -> Result<DMatrix<f64>> {
    if n > lat.n_vertices() {
        return Err(Error::arg(format!("sector {n} out of range for {}", lat.label())));
    }
    let masks = sector_masks(lat.n_vertices(), n);
    let mut m = DMatrix::zeros(masks.len(), masks.len());
    for (row, &s) in masks.iter().enumerate() {
        for &(i, j) in lat.edges() {
            if ((s >> i) ^ (s >> j)) & 1 == 1 {
                let t = s ^ (1 << i) ^ (1 << j);
                m[(row, row)] += 1.0;
                m[(row, sector_rank(t))] -= 1.0;
            }
        }
    }
    Ok(m)
}

/// Spectral data of every sector Hamiltonian of a lattice.
pub struct SectorSpectra {
    n_vertices: usize,
    sectors: Vec<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl SectorSpectra {
    pub fn new(lat: &Lattice) -> Result<Self> {
        check_exact_size(lat)?;
        let sectors = (0..=lat.n_vertices())
            .map(|n| sector_hamiltonian(lat, n).map(SymmetricEigen::new))
            .collect::<Result<_>>()?;
        Ok(SectorSpectra { n_vertices: lat.n_vertices(), sectors })
    }

    pub fn eigenvalues(&self, n: usize) -> &[f64] {
        self.sectors[n].eigenvalues.as_slice()
    }

    /// `e^{-Ht} f`, sector by sector.
    pub fn propagate(&self, f: &SubsetVector, t: f64) -> Result<SubsetVector> {
        if f.n_vertices() != self.n_vertices {
            return Err(Error::arg("vector size does not match the lattice"));
        }
        let mut out = SubsetVector::zeros(self.n_vertices)?;
        for (n, eig) in self.sectors.iter().enumerate() {
            let masks = sector_masks(self.n_vertices, n);
            let x = DVector::from_iterator(masks.len(), masks.iter().map(|&m| f.coeffs()[m as usize]));
            let z = propagate_block(eig, x, t);
            for (&m, &zk) in masks.iter().zip(z.iter()) {
                out.coeffs_mut()[m as usize] = zk;
            }
        }
        Ok(out)
    }
}

/// Fixed-step RK4 integrator for the heat equation.
pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Rk4 { k: std::array::from_fn(|_| vec![0.0; len]), tmp: vec![0.0; len] }
    }

    pub fn step(&mut self, lat: &Lattice, f: &mut [f64], h: f64) {
        self.step_with(f, h, |x, out| heat_rhs_into(lat, x, out));
    }

    /// One step of `df/dt = rhs(f)`.
    pub fn step_with(&mut self, f: &mut [f64], h: f64, mut rhs: impl FnMut(&[f64], &mut [f64])) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        rhs(f, k1);
        for ((t, &x), &k) in tmp.iter_mut().zip(f.iter()).zip(k1.iter()) {
            *t = x + 0.5 * h * k;
        }
        rhs(tmp, k2);
        for ((t, &x), &k) in tmp.iter_mut().zip(f.iter()).zip(k2.iter()) {
            *t = x + 0.5 * h * k;
        }
        rhs(tmp, k3);
        for ((t, &x), &k) in tmp.iter_mut().zip(f.iter()).zip(k3.iter()) {
            *t = x + h * k;
        }
        rhs(tmp, k4);
        for (i, x) in f.iter_mut().enumerate() {
            *x += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Advance by `span` using `ceil(span / dt)` equal steps.
    pub fn advance(&mut self, lat: &Lattice, f: &mut [f64], span: f64, dt: f64) {
        self.advance_with(f, span, dt, |x, out| heat_rhs_into(lat, x, out));
    }

    pub fn advance_with(&mut self, f: &mut [f64], span: f64, dt: f64, mut rhs: impl FnMut(&[f64], &mut [f64])) {
        if span <= 0.0 {
            return;
        }
        let steps = (span / dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            self.step_with(f, h, &mut rhs);
        }
    }
}

/// The subset graph restricted to one sector, as adjacency lists over
/// sector ranks.
pub struct SectorGraph {
    n_vertices: usize,
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl SectorGraph {
    pub fn new(lat: &Lattice, n: usize) -> Result<Self> {
        if n > lat.n_vertices() {
            return Err(Error::arg(format!("sector {n} out of range for {}", lat.label())));
        }
        let masks = sector_masks(lat.n_vertices(), n);
        let mut offsets = Vec::with_capacity(masks.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for &s in &masks {
            for &(i, j) in lat.edges() {
                if ((s >> i) ^ (s >> j)) & 1 == 1 {
                    targets.push(sector_rank(s ^ (1 << i) ^ (1 << j)) as u32);
                }
            }
            offsets.push(targets.len());
        }
        Ok(SectorGraph { n_vertices: lat.n_vertices(), n, offsets, targets })
    }

    pub fn dim(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `out = Σ_{S'~S} (f(S') - f(S))` within the sector.
    pub fn heat_rhs_into(&self, f: &[f64], out: &mut [f64]) {
        for (row, slot) in out.iter_mut().enumerate() {
            let nbrs = &self.targets[self.offsets[row]..self.offsets[row + 1]];
            let sum: f64 = nbrs.iter().map(|&t| f[t as usize]).sum();
            *slot = sum - nbrs.len() as f64 * f[row];
        }
    }

    fn advance(&self, rk: &mut Rk4, g: &mut [f64], span: f64, dt: f64) {
        rk.advance_with(g, span, dt, |x, out| self.heat_rhs_into(x, out));
    }
}

/// `e^{-Ht} g` for a vector supported on a single sector.
pub fn evolve_sector(lat: &Lattice, g: &SectorVector, t: f64, method: Method, dt: f64) -> Result<SectorVector> {
    if g.n_vertices() != lat.n_vertices() {
        return Err(Error::arg("sector vector size does not match the lattice"));
    }
    EvolutionConfig::new(t, method).with_dt(dt).validate()?;
    let n = g.sector();
    match method {
        Method::ExactExpm => {
            check_exact_size(lat)?;
            let eig = SymmetricEigen::new(sector_hamiltonian(lat, n)?);
            let y = propagate_block(&eig, DVector::from_column_slice(g.entries()), t);
            SectorVector::from_entries(g.n_vertices(), n, y.as_slice().to_vec())
        }
        Method::Rk4 => {
            let graph = SectorGraph::new(lat, n)?;
            let mut x = g.entries().to_vec();
            graph.advance(&mut Rk4::new(x.len()), &mut x, t, dt);
            SectorVector::from_entries(graph.n_vertices, graph.n, x)
        }
    }
}

fn check_exact_size(lat: &Lattice) -> Result<()> {
    if lat.n_vertices() > EXACT_MAX_VERTICES {
        return Err(Error::Size {
            what: "vertex count for exact evolution",
            actual: lat.n_vertices(),
            limit: EXACT_MAX_VERTICES,
        });
    }
    Ok(())
}

fn propagate_block(eig: &SymmetricEigen<f64, nalgebra::Dyn>, x: DVector<f64>, t: f64) -> DVector<f64> {
    let v = &eig.eigenvectors;
    let mut y = v.tr_mul(&x);
    for (yk, &lam) in y.iter_mut().zip(eig.eigenvalues.iter()) {
        *yk *= (-lam * t).exp();
    }
    v * y
}

/// Evolve `f0` and return `(t, f(t))` for each record time in increasing
/// order.
pub fn evolve(lat: &Lattice, f0: &SubsetVector, cfg: &EvolutionConfig) -> Result<Vec<(f64, SubsetVector)>> {
    check_size(lat, f0)?;
    let times = cfg.validate()?;
    match cfg.method {
        Method::ExactExpm => {
            let spectra = SectorSpectra::new(lat)?;
            times
                .into_iter()
                .map(|t| Ok((t, spectra.propagate(f0, t)?)))
                .collect()
        }
        Method::Rk4 => {
            let mut out: Vec<(f64, SubsetVector)> =
                times.iter().map(|&t| Ok((t, SubsetVector::zeros(lat.n_vertices())?))).collect::<Result<_>>()?;
            for n in 0..=lat.n_vertices() {
                let masks = sector_masks(lat.n_vertices(), n);
                let mut x: Vec<f64> = masks.iter().map(|&m| f0.coeffs()[m as usize]).collect();
                if x.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let graph = SectorGraph::new(lat, n)?;
                let mut rk = Rk4::new(x.len());
                let mut now = 0.0;
                for (t, snap) in out.iter_mut() {
                    graph.advance(&mut rk, &mut x, *t - now, cfg.dt);
                    now = *t;
                    for (&m, &v) in masks.iter().zip(&x) {
                        snap.coeffs_mut()[m as usize] = v;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Convenience wrapper returning only `f(t)`.
pub fn evolve_to(lat: &Lattice, f0: &SubsetVector, t: f64, method: Method, dt: f64) -> Result<SubsetVector> {
    let cfg = EvolutionConfig::new(t, method).with_dt(dt);
    let mut snaps = evolve(lat, f0, &cfg)?;
    Ok(snaps.pop().expect("one record time").1)
}

/// Number of coefficients in sector `n`.
pub fn sector_dim(n_vertices: usize, n: usize) -> usize {
    binomial(n_vertices, n)
}
