//! Binary coupling strings and the topology families used as benchmarks.
//!
//! A network of `n` nodes has `n(n-1)/2` possible undirected edges. Edges are
//! ordered lexicographically over pairs `(x, y)` with `x < y` and 0-indexed
//! nodes, so for `n = 4` the genome reads `(0,1) (0,2) (0,3) (1,2) (1,3) (2,3)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of couplings (genome length) for an `n`-node network.
pub fn num_couplings(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of edge `(x, y)` in the canonical ordering.
pub fn coupling_index(x: usize, y: usize, n: usize) -> Result<usize> {
    if x >= y || y >= n {
        return Err(Error::InvalidEdge { x, y, n });
    }
    // rows 0..x contribute (n-1) + (n-2) + ... + (n-x) entries
    Ok(x * n - x * (x + 1) / 2 + (y - x - 1))
}

/// Inverse of [`coupling_index`].
pub fn coupling_pair(index: usize, n: usize) -> Option<(usize, usize)> {
    if index >= num_couplings(n) {
        return None;
    }
    let mut rest = index;
    for x in 0..n {
        let row = n - x - 1;
        if rest < row {
            return Some((x, x + 1 + rest));
        }
        rest -= row;
    }
    None
}

/// A binary genome: one bit per possible edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CouplingRepr", into = "CouplingRepr")]
pub struct CouplingString {
    n: usize,
    bits: Vec<u8>,
}

impl CouplingString {
    pub fn new(n: usize, bits: Vec<u8>) -> Result<Self> {
        let expected = num_couplings(n);
        if bits.len() != expected {
            return Err(Error::Shape(format!(
                "coupling string for n = {n} needs {expected} bits, got {}",
                bits.len()
            )));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidSpec(format!("coupling bit {bad} is not 0 or 1")));
        }
        Ok(CouplingString { n, bits })
    }

    pub fn zeros(n: usize) -> Self {
        CouplingString {
            n,
            bits: vec![0; num_couplings(n)],
        }
    }

    pub fn ones(n: usize) -> Self {
        CouplingString {
            n,
            bits: vec![1; num_couplings(n)],
        }
    }

    /// Parses a `0`/`1` string such as `"111000"`.
    pub fn from_bit_str(n: usize, s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidSpec(format!(
                    "unexpected character {other:?} in coupling string"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(n, bits)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    pub fn edge(&self, x: usize, y: usize) -> Result<bool> {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        Ok(self.bits[coupling_index(a, b, self.n)?] == 1)
    }

    pub fn set_edge(&mut self, x: usize, y: usize, on: bool) -> Result<()> {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        let idx = coupling_index(a, b, self.n)?;
        self.bits[idx] = u8::from(on);
        Ok(())
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Edges that are switched on, in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .filter_map(move |(i, _)| coupling_pair(i, self.n))
    }

    /// Symmetric `{0, 1}` adjacency matrix with a zero diagonal. With unit
    /// couplings and zero on-site energies this is the walk Hamiltonian.
    pub fn to_hamiltonian(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut h = DMatrix::zeros(n, n);
        let mut idx = 0;
        for x in 0..n {
            for y in x + 1..n {
                let v = f64::from(self.bits[idx]);
                h[(x, y)] = v;
                h[(y, x)] = v;
                idx += 1;
            }
        }
        h
    }
}

impl fmt::Display for CouplingString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CouplingRepr {
    n: usize,
    bits: String,
}

impl TryFrom<CouplingRepr> for CouplingString {
    type Error = Error;

    fn try_from(r: CouplingRepr) -> Result<Self> {
        CouplingString::from_bit_str(r.n, &r.bits)
    }
}

impl From<CouplingString> for CouplingRepr {
    fn from(c: CouplingString) -> Self {
        CouplingRepr {
            n: c.n,
            bits: c.to_string(),
        }
    }
}

/// A family of networks, instantiated for a given size with [`Topology::build`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Topology {
    /// Node 0 is the hub.
    Star,
    Complete,
    Line,
    /// A line closed by the edge `(0, n-1)`.
    Circle,
    EdgeList {
        /// Where the edges came from, used in report labels.
        source: String,
        edges: Vec<(usize, usize)>,
    },
}

impl Topology {
    /// Short label as accepted on the command line.
    pub fn label(&self) -> String {
        match self {
            Topology::Star => "star".into(),
            Topology::Complete => "complete".into(),
            Topology::Line => "line".into(),
            Topology::Circle => "circle".into(),
            Topology::EdgeList { source, .. } => format!("edgelist:{source}"),
        }
    }

    pub fn from_edges(source: impl Into<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(x, y) in &edges {
            if x >= y {
                return Err(Error::InvalidSpec(format!("edge ({x}, {y}) must satisfy x < y")));
            }
            if !seen.insert((x, y)) {
                return Err(Error::InvalidSpec(format!("duplicate edge ({x}, {y})")));
            }
        }
        Ok(Topology::EdgeList {
            source: source.into(),
            edges,
        })
    }

    /// Reads an edge list: one `x y` pair per line, `#` starts a comment.
    /// Pairs may be written in either order; self loops and repeats are rejected.
    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let edges = parse_edge_list(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        Self::from_edges(path.display().to_string(), edges)
    }

    pub fn build(&self, n: usize) -> Result<CouplingString> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("networks need at least 2 nodes, got {n}")));
        }
        let mut c = CouplingString::zeros(n);
        match self {
            Topology::Star => {
                for y in 1..n {
                    c.set_edge(0, y, true)?;
                }
            }
            Topology::Complete => c = CouplingString::ones(n),
            Topology::Line => {
                for x in 0..n - 1 {
                    c.set_edge(x, x + 1, true)?;
                }
            }
            Topology::Circle => {
                for x in 0..n - 1 {
                    c.set_edge(x, x + 1, true)?;
                }
                c.set_edge(0, n - 1, true)?;
            }
            Topology::EdgeList { edges, .. } => {
                for &(x, y) in edges {
                    if y >= n {
                        return Err(Error::InvalidSpec(format!(
                            "edge ({x}, {y}) references a node outside 0..{n}"
                        )));
                    }
                    c.set_edge(x, y, true)?;
                }
            }
        }
        Ok(c)
    }
}

impl FromStr for Topology {
    type Err = Error;

    /// `star`, `complete`, `line`, `circle` or `edgelist:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Topology::Star),
            "complete" => Ok(Topology::Complete),
            "line" => Ok(Topology::Line),
            "circle" => Ok(Topology::Circle),
            other => match other.strip_prefix("edgelist:") {
                Some(path) if !path.is_empty() => Topology::load_edge_list(path),
                _ => Err(Error::InvalidSpec(format!(
                    "unknown topology {other:?}; expected star, complete, line, circle or edgelist:<path>"
                ))),
            },
        }
    }
}

fn parse_edge_list(text: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = fields.as_slice() else {
            return Err(format!("line {}: expected two node indices", lineno + 1));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| format!("line {}: {s:?} is not a node index", lineno + 1))
        };
        let (x, y) = (parse(a)?, parse(b)?);
        if x == y {
            return Err(format!("line {}: self loop on node {x}", lineno + 1));
        }
        edges.push((x.min(y), x.max(y)));
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Position of (x, y) found by walking every pair in lexicographic order.
    fn enumerate_index(x: usize, y: usize, n: usize) -> usize {
        let mut i = 0;
        for a in 0..n {
            for b in a + 1..n {
                if (a, b) == (x, y) {
                    return i;
                }
                i += 1;
            }
        }
        panic!("pair not found");
    }

    #[test]
    fn coupling_index_examples() {
        assert_eq!(coupling_index(0, 1, 5).unwrap(), 0);
        assert_eq!(coupling_index(3, 4, 5).unwrap(), 9);
        assert_eq!(enumerate_index(1, 3, 5), 5);
        assert_eq!(coupling_index(1, 3, 5).unwrap(), 5);
    }

    #[test]
    fn coupling_index_matches_enumeration() {
        for n in 2..=12 {
            let mut seen = vec![false; num_couplings(n)];
            for x in 0..n {
                for y in x + 1..n {
                    let i = coupling_index(x, y, n).unwrap();
                    assert_eq!(i, enumerate_index(x, y, n));
                    assert_eq!(coupling_pair(i, n), Some((x, y)));
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn coupling_index_rejects_bad_edges() {
        assert!(matches!(coupling_index(2, 2, 5), Err(Error::InvalidEdge { .. })));
        assert!(matches!(coupling_index(3, 1, 5), Err(Error::InvalidEdge { .. })));
        assert!(matches!(coupling_index(1, 5, 5), Err(Error::InvalidEdge { .. })));
    }

    #[test]
    fn build_examples() {
        assert_eq!(Topology::Star.build(4).unwrap().bits(), &[1, 1, 1, 0, 0, 0]);
        assert_eq!(Topology::Complete.build(4).unwrap().bits(), &[1, 1, 1, 1, 1, 1]);

        // circle n=4: (0,1),(1,2),(2,3),(0,3) placed via coupling_index
        let mut expected = vec![0u8; 6];
        for (x, y) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            expected[enumerate_index(x, y, 4)] = 1;
        }
        assert_eq!(expected, vec![1, 0, 1, 1, 0, 1]);
        assert_eq!(Topology::Circle.build(4).unwrap().bits(), expected.as_slice());
    }

    #[test]
    fn edge_counts_per_family() {
        for n in 3..=12 {
            assert_eq!(Topology::Complete.build(n).unwrap().count_ones(), num_couplings(n));
            assert_eq!(Topology::Star.build(n).unwrap().count_ones(), n - 1);
            assert_eq!(Topology::Line.build(n).unwrap().count_ones(), n - 1);
            assert_eq!(Topology::Circle.build(n).unwrap().count_ones(), n);
        }
    }

    #[test]
    fn edge_list_out_of_range() {
        let t = Topology::from_edges("test", vec![(0, 1), (2, 5)]).unwrap();
        assert!(t.build(6).is_ok());
        assert!(matches!(t.build(5), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn edge_list_builds_exact_edges() {
        let t = Topology::from_edges("test", vec![(0, 2), (1, 3)]).unwrap();
        let c = t.build(4).unwrap();
        assert_eq!(c.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 3)]);
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# header\n0 1\n\n 3 2  # reversed\n1\t4\n";
        assert_eq!(parse_edge_list(text).unwrap(), vec![(0, 1), (2, 3), (1, 4)]);
        assert!(parse_edge_list("0 1 2\n").is_err());
        assert!(parse_edge_list("3 3\n").is_err());
        assert!(parse_edge_list("a 1\n").is_err());
        assert!(Topology::from_edges("dup", vec![(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn topology_names() {
        for name in ["star", "complete", "line", "circle"] {
            assert_eq!(name.parse::<Topology>().unwrap().label(), name);
        }
        assert!("ring".parse::<Topology>().is_err());
        assert!("edgelist:".parse::<Topology>().is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let h = CouplingString::new(2, vec![1]).unwrap().to_hamiltonian();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let h = CouplingString::zeros(3).to_hamiltonian();
        assert_eq!(h, DMatrix::zeros(3, 3));

        let h = Topology::Star.build(4).unwrap().to_hamiltonian();
        assert_eq!(h.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 1.0, 1.0]);
        assert_eq!(h.view((1, 1), (3, 3)).iter().copied().sum::<f64>(), 0.0);
    }

    #[test]
    fn rejects_malformed_strings() {
        assert!(CouplingString::new(4, vec![1, 0]).is_err());
        assert!(CouplingString::new(3, vec![1, 2, 0]).is_err());
        assert!(CouplingString::from_bit_str(3, "10x").is_err());
    }

    #[test]
    fn serde_uses_bit_string() {
        let c = Topology::Star.build(4).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"n":4,"bits":"111000"}"#);
        assert_eq!(serde_json::from_str::<CouplingString>(&json).unwrap(), c);
    }

    fn arb_string() -> impl Strategy<Value = CouplingString> {
        (2usize..=10).prop_flat_map(|n| {
            proptest::collection::vec(0u8..=1, num_couplings(n))
                .prop_map(move |bits| CouplingString::new(n, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn hamiltonian_round_trip(c in arb_string()) {
            let n = c.n();
            let h = c.to_hamiltonian();
            let mut back = vec![0u8; c.len()];
            for x in 0..n {
                prop_assert_eq!(h[(x, x)], 0.0);
                for y in 0..n {
                    prop_assert_eq!(h[(x, y)], h[(y, x)]);
                    if x < y {
                        back[coupling_index(x, y, n).unwrap()] = h[(x, y)] as u8;
                    }
                }
            }
            prop_assert_eq!(back.as_slice(), c.bits());
        }
    }
}
