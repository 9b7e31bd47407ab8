//! Initial states: `single:<vertex>`, `set:<mask>`, `product:<p0,p1,...>`
//! and `random` (nonnegative, normalized, seeded).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SubsetId;
use crate::polymer::product_state;
use crate::state::SubsetVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialState {
    Single { vertex: usize },
    Set { mask: u32 },
    Product { probs: Vec<f64> },
    Random,
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::arg(format!("cannot parse initial state `{s}`"));
        match head {
            "single" => Ok(InitialState::Single { vertex: tail.parse().map_err(|_| bad())? }),
            "set" => {
                let mask = match tail.strip_prefix("0x") {
                    Some(hex) => u32::from_str_radix(hex, 16),
                    None => match tail.strip_prefix("0b") {
                        Some(bin) => u32::from_str_radix(bin, 2),
                        None => tail.parse(),
                    },
                }
                .map_err(|_| bad())?;
                Ok(InitialState::Set { mask })
            }
            "product" => {
                let probs = tail
                    .split(',')
                    .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(InitialState::Product { probs })
            }
            "random" if tail.is_empty() => Ok(InitialState::Random),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Single { vertex } => write!(f, "single:{vertex}"),
            InitialState::Set { mask } => write!(f, "set:{mask}"),
            InitialState::Product { probs } => {
                let p: Vec<String> = probs.iter().map(|x| x.to_string()).collect();
                write!(f, "product:{}", p.join(","))
            }
            InitialState::Random => f.write_str("random"),
        }
    }
}

impl InitialState {
    pub fn build(&self, n_vertices: usize, seed: u64) -> Result<SubsetVector> {
        match self {
            InitialState::Single { vertex } => {
                if *vertex >= n_vertices {
                    return Err(Error::arg(format!("vertex {vertex} out of range for {n_vertices} vertices")));
                }
                SubsetVector::indicator(n_vertices, SubsetId::from_vertices([*vertex]))
            }
            InitialState::Set { mask } => SubsetVector::indicator(n_vertices, SubsetId(*mask)),
            InitialState::Product { probs } => {
                if probs.len() != n_vertices {
                    return Err(Error::arg(format!(
                        "product state needs {n_vertices} site probabilities, got {}",
                        probs.len()
                    )));
                }
                if probs.iter().any(|p| !p.is_finite()) {
                    return Err(Error::arg("product probabilities must be finite"));
                }
                product_state(probs)
            }
            InitialState::Random => random_state(n_vertices, seed),
        }
    }
}

/// Uniform nonnegative coefficients scaled to sum to one.
pub fn random_state(n_vertices: usize, seed: u64) -> Result<SubsetVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..1usize << n_vertices).map(|_| rng.gen::<f64>()).collect();
    SubsetVector::from_coeffs(n_vertices, raw)?.normalize()
}
