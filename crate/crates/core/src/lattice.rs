//! Finite rectangular lattices and the nearest-neighbour relation on subsets
//! of their vertices.
//!
//! Vertices are numbered row-major over `dims`: the last coordinate varies
//! fastest. A subset of vertices is a bitmask with bit `i` set iff vertex `i`
//! belongs to it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported vertex count. Dense subset-indexed storage needs
/// `2^N` coefficients.
pub const MAX_VERTICES: usize = 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::arg(format!("unknown boundary `{other}`"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// A set of lattice vertices encoded as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetId(pub u32);

impl SubsetId {
    pub const EMPTY: SubsetId = SubsetId(0);

    pub fn from_vertices<I: IntoIterator<Item = usize>>(vertices: I) -> Self {
        SubsetId(vertices.into_iter().fold(0, |m, v| m | (1 << v)))
    }

    /// The whole vertex set of an `n`-vertex lattice.
    pub fn full(n: usize) -> Self {
        SubsetId(full_mask(n) as u32)
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn cardinality(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn contains(self, v: usize) -> bool {
        self.0 >> v & 1 == 1
    }

    pub fn is_subset_of(self, other: SubsetId) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn vertices(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let v = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(v)
            }
        })
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, v) in self.vertices().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

#[inline]
pub(crate) fn full_mask(n: usize) -> usize {
    (1usize << n) - 1
}

/// Lattice shape as given on the command line, e.g. `3x2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dims: Vec<usize>,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice> {
        Lattice::new(&self.dims, self.boundary)
    }
}

/// Parse `AxBx...` into side lengths.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::arg(format!("bad dimension `{part}` in `{s}`")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    dims: Vec<usize>,
    boundary: Boundary,
    n_vertices: usize,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Lattice {
    /// Build a rectangular lattice with row-major vertex numbering.
    pub fn new(dims: &[usize], boundary: Boundary) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::arg("lattice needs at least one dimension"));
        }
        if dims.contains(&0) {
            return Err(Error::arg(format!("side lengths must be positive, got {dims:?}")));
        }
        let n_vertices = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let n_vertices = match n_vertices {
            Some(n) if n <= MAX_VERTICES => n,
            Some(n) => {
                return Err(Error::Size { what: "vertex count", actual: n, limit: MAX_VERTICES })
            }
            None => {
                return Err(Error::Size { what: "vertex count", actual: usize::MAX, limit: MAX_VERTICES })
            }
        };

        // strides[k] = product of dims[k+1..]
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len() - 1).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }

        let mut adjacency = vec![Vec::new(); n_vertices];
        for (v, adj) in adjacency.iter_mut().enumerate() {
            for (&side, &stride) in dims.iter().zip(&strides) {
                let coord = v / stride % side;
                let mut push = |c: usize| {
                    let w = v - coord * stride + c * stride;
                    if w != v && !adj.contains(&w) {
                        adj.push(w);
                    }
                };
                if coord + 1 < side {
                    push(coord + 1);
                } else if boundary == Boundary::Periodic {
                    push(0);
                }
                if coord > 0 {
                    push(coord - 1);
                } else if boundary == Boundary::Periodic {
                    push(side - 1);
                }
            }
            adj.sort_unstable();
        }

        let edges = adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect();

        Ok(Lattice { dims: dims.to_vec(), boundary, n_vertices, adjacency, edges })
    }

    pub fn from_spec(spec: &LatticeSpec) -> Result<Self> {
        spec.build()
    }

    pub fn spec(&self) -> LatticeSpec {
        LatticeSpec { dims: self.dims.clone(), boundary: self.boundary }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Number of subsets, `2^N`.
    pub fn n_subsets(&self) -> usize {
        1 << self.n_vertices
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Undirected nearest-neighbour edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// `dims` rendered as `AxBx...`.
    pub fn label(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        format!("{} ({})", dims.join("x"), self.boundary)
    }

    pub fn check_subset(&self, s: SubsetId) -> Result<()> {
        if s.index() >= self.n_subsets() {
            return Err(Error::arg(format!(
                "subset mask {:#x} out of range for {} vertices",
                s.0, self.n_vertices
            )));
        }
        Ok(())
    }

    /// All `S'` obtained from `s` by moving one element to an adjacent vertex
    /// outside `s`. Each lattice edge with exactly one endpoint in `s` yields
    /// exactly one such set.
    pub fn subset_neighbors(&self, s: SubsetId) -> Result<Vec<SubsetId>> {
        self.check_subset(s)?;
        let mut out: Vec<SubsetId> = self
            .edges
            .iter()
            .filter(|&&(i, j)| s.contains(i) != s.contains(j))
            .map(|&(i, j)| SubsetId(s.0 ^ (1 << i) ^ (1 << j)))
            .collect();
        out.sort_unstable();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize) -> Lattice {
        Lattice::new(&[n], Boundary::Open).unwrap()
    }

    #[test]
    fn single_site_has_no_edges() {
        let lat = path(1);
        assert_eq!(lat.n_vertices(), 1);
        assert!(lat.edges().is_empty());
    }

    #[test]
    fn two_sites_one_edge() {
        let lat = path(2);
        assert_eq!(lat.edges(), &[(0, 1)]);
    }

    #[test]
    fn square_has_four_edges() {
        let lat = Lattice::new(&[2, 2], Boundary::Open).unwrap();
        assert_eq!(lat.n_vertices(), 4);
        // row-major: (0,0)=0 (0,1)=1 (1,0)=2 (1,1)=3
        assert_eq!(lat.edges(), &[(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn periodic_ring_and_degenerate_sides() {
        let ring = Lattice::new(&[4], Boundary::Periodic).unwrap();
        assert_eq!(ring.edges().len(), 4);
        assert!(ring.are_adjacent(0, 3));
        // side 2 wraps onto the same neighbour; side 1 onto itself
        let two = Lattice::new(&[2], Boundary::Periodic).unwrap();
        assert_eq!(two.edges(), &[(0, 1)]);
        let one = Lattice::new(&[1, 3], Boundary::Periodic).unwrap();
        assert_eq!(one.edges().len(), 3);
    }

    #[test]
    fn degree_bounds() {
        let open = Lattice::new(&[3, 4, 2], Boundary::Open).unwrap();
        for v in 0..open.n_vertices() {
            assert!((1..=6).contains(&open.neighbors(v).len()));
        }
        let torus = Lattice::new(&[3, 4], Boundary::Periodic).unwrap();
        for v in 0..torus.n_vertices() {
            assert_eq!(torus.neighbors(v).len(), 4);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(Lattice::new(&[5, 5], Boundary::Open), Err(Error::Size { .. })));
        assert!(matches!(Lattice::new(&[3, 0], Boundary::Open), Err(Error::Argument(_))));
        assert!(matches!(Lattice::new(&[], Boundary::Open), Err(Error::Argument(_))));
        assert!(Lattice::new(&[4, 3, 2], Boundary::Open).is_ok());
    }

    #[test]
    fn parse_dims_forms() {
        assert_eq!(parse_dims("3x2").unwrap(), vec![3, 2]);
        assert_eq!(parse_dims("4").unwrap(), vec![4]);
        assert!(parse_dims("3x").is_err());
        assert!(parse_dims("ax2").is_err());
    }

    #[test]
    fn subset_neighbor_examples() {
        let lat = path(2);
        assert_eq!(lat.subset_neighbors(SubsetId(0b01)).unwrap(), vec![SubsetId(0b10)]);

        let lat = path(3);
        let s = SubsetId::from_vertices([0, 2]);
        assert_eq!(
            lat.subset_neighbors(s).unwrap(),
            vec![SubsetId::from_vertices([0, 1]), SubsetId::from_vertices([1, 2])]
        );

        let lat = Lattice::new(&[3, 2], Boundary::Open).unwrap();
        assert!(lat.subset_neighbors(SubsetId::full(6)).unwrap().is_empty());
        assert!(lat.subset_neighbors(SubsetId::EMPTY).unwrap().is_empty());
        assert!(lat.subset_neighbors(SubsetId(1 << 6)).is_err());
    }

    proptest! {
        #[test]
        fn subset_adjacency_is_symmetric_and_single_edge(mask in 0u32..(1 << 8), periodic: bool) {
            let b = if periodic { Boundary::Periodic } else { Boundary::Open };
            let lat = Lattice::new(&[4, 2], b).unwrap();
            let s = SubsetId(mask);
            let nbrs = lat.subset_neighbors(s).unwrap();
            for w in nbrs.windows(2) {
                prop_assert!(w[0] != w[1]);
            }
            for &t in &nbrs {
                prop_assert_eq!(t.cardinality(), s.cardinality());
                let diff = s.0 ^ t.0;
                prop_assert_eq!(diff.count_ones(), 2);
                let i = diff.trailing_zeros() as usize;
                let j = 31 - diff.leading_zeros() as usize;
                prop_assert!(lat.are_adjacent(i, j));
                prop_assert!(lat.subset_neighbors(t).unwrap().contains(&s));
            }
        }
    }
}
