//! Continuous-time quantum walk dynamics on an unweighted network.
//!
//! The Hamiltonian is the adjacency matrix, so `e^{-iHt}` is formed from the
//! real symmetric eigendecomposition `H = V diag(λ) Vᵀ`. One decomposition
//! serves every evolution time.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CouplingString;

pub type C64 = Complex<f64>;

const NORM_TOL: f64 = 1e-12;
const SLICE_TOL: f64 = 1e-9;

/// Initial state of the walker.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeState {
    amplitudes: Vec<C64>,
}

impl ProbeState {
    /// Takes amplitudes that already have unit norm.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Config(format!(
                "probe state must have unit norm, got squared norm {norm}"
            )));
        }
        Ok(ProbeState { amplitudes })
    }

    /// Rescales real amplitudes to unit norm.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if values.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::Config("probe amplitudes must be finite and not all zero".into()));
        }
        Ok(ProbeState {
            amplitudes: values.iter().map(|v| C64::new(v / norm, 0.0)).collect(),
        })
    }

    /// Amplitudes proportional to `1, 2, ..., n`. The default probe: every site
    /// is populated, and the state is not an eigenvector of regular graphs.
    pub fn ramp(n: usize) -> Self {
        let values: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        Self::from_real(&values).expect("ramp is non-zero")
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_real(&vec![1.0; n]).expect("uniform is non-zero")
    }

    pub fn localized(n: usize, site: usize) -> Result<Self> {
        if site >= n {
            return Err(Error::Config(format!("probe site {site} outside 0..{n}")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); n];
        amplitudes[site] = C64::new(1.0, 0.0);
        Ok(ProbeState { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `|ψ_x|²` for each site.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Strictly increasing, non-negative evolution times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Config("at least one evolution time is required".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config(format!(
                "evolution times must be finite and >= 0: {times:?}"
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "evolution times must be strictly increasing: {times:?}"
            )));
        }
        Ok(TimeGrid { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(times: Vec<f64>) -> Result<Self> {
        TimeGrid::new(times)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.times
    }
}

/// Occupation probabilities of every site at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteDistribution {
    pub probs: Vec<f64>,
}

/// Site distributions at several times, stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatenatedDistribution {
    n: usize,
    values: Vec<f64>,
}

impl ConcatenatedDistribution {
    /// Validates that every slice has length `n`, is non-negative and sums to 1.
    pub fn from_slices(n: usize, slices: &[Vec<f64>]) -> Result<Self> {
        if n == 0 || slices.is_empty() {
            return Err(Error::Shape(
                "a distribution needs at least one site and one slice".into(),
            ));
        }
        let mut values = Vec::with_capacity(n * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.len() != n {
                return Err(Error::Shape(format!("slice {k} has {} entries, expected {n}", s.len())));
            }
            if s.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Shape(format!("slice {k} has negative or non-finite entries")));
            }
            let total: f64 = s.iter().sum();
            if (total - 1.0).abs() > SLICE_TOL {
                return Err(Error::Shape(format!("slice {k} sums to {total}, not 1")));
            }
            values.extend_from_slice(s);
        }
        Ok(ConcatenatedDistribution { n, values })
    }

    pub(crate) fn from_flat_unchecked(n: usize, values: Vec<f64>) -> Self {
        debug_assert!(n > 0 && values.len().is_multiple_of(n));
        ConcatenatedDistribution { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_slices(&self) -> usize {
        self.values.len() / self.n
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n)
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    /// The `K·n` probabilities, slice by slice.
    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.slices().map(<[f64]>::to_vec).collect()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.values.len() == other.values.len()
    }
}

/// Eigendecomposition of a real symmetric Hamiltonian.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn of(h: &DMatrix<f64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Shape(format!("Hamiltonian is {}x{}", h.nrows(), h.ncols())));
        }
        let n = h.nrows();
        for x in 0..n {
            for y in x + 1..n {
                if h[(x, y)] != h[(y, x)] {
                    return Err(Error::Shape("Hamiltonian is not symmetric".into()));
                }
            }
        }
        let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
        Ok(Spectrum {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `V diag(e^{-iλt}) Vᵀ`.
    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let phases: Vec<C64> = self.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
        DMatrix::from_fn(n, n, |x, y| (0..n).map(|j| phases[j] * (v[(x, j)] * v[(y, j)])).sum())
    }
}

/// `e^{-iHt}` for a real symmetric `H`.
pub fn spectral_propagator(h: &DMatrix<f64>, t: f64) -> Result<DMatrix<C64>> {
    Ok(Spectrum::of(h)?.propagator(t))
}

/// A probe state prepared in the eigenbasis of one network, ready to be
/// evolved to any time.
pub struct Evolver {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    /// `Vᵀ ψ0`
    coefficients: Vec<C64>,
}

impl Evolver {
    pub fn new(couplings: &CouplingString, probe: &ProbeState) -> Result<Self> {
        let n = couplings.n();
        if probe.dim() != n {
            return Err(Error::Shape(format!(
                "probe state has {} amplitudes but the network has {n} nodes",
                probe.dim()
            )));
        }
        let spectrum = Spectrum::of(&couplings.to_hamiltonian())?;
        let v = &spectrum.eigenvectors;
        let psi = probe.amplitudes();
        let coefficients = (0..n).map(|j| (0..n).map(|y| psi[y] * v[(y, j)]).sum()).collect();
        Ok(Evolver {
            eigenvalues: spectrum.eigenvalues,
            eigenvectors: spectrum.eigenvectors,
            coefficients,
        })
    }

    /// Writes `|⟨x|e^{-iHt}|ψ0⟩|²` into `out`, which must have one slot per site.
    pub fn distribution_into(&self, t: f64, out: &mut [f64]) {
        let n = self.eigenvalues.len();
        debug_assert_eq!(out.len(), n);
        let mut amps = [C64::new(0.0, 0.0); 32];
        let mut heap;
        let amps: &mut [C64] = if n <= amps.len() {
            &mut amps[..n]
        } else {
            heap = vec![C64::new(0.0, 0.0); n];
            &mut heap
        };
        for j in 0..n {
            let w = C64::from_polar(1.0, -self.eigenvalues[j] * t) * self.coefficients[j];
            let col = self.eigenvectors.column(j);
            for (a, &vx) in amps.iter_mut().zip(col.iter()) {
                *a += w * vx;
            }
        }
        for (p, a) in out.iter_mut().zip(amps.iter()) {
            *p = a.norm_sqr();
        }
    }

    pub fn concatenated(&self, grid: &TimeGrid) -> ConcatenatedDistribution {
        let n = self.eigenvalues.len();
        let mut values = vec![0.0; n * grid.len()];
        for (chunk, &t) in values.chunks_mut(n).zip(grid.times()) {
            self.distribution_into(t, chunk);
        }
        ConcatenatedDistribution::from_flat_unchecked(n, values)
    }
}

pub fn site_distribution(couplings: &CouplingString, probe: &ProbeState, t: f64) -> Result<SiteDistribution> {
    let evolver = Evolver::new(couplings, probe)?;
    let mut probs = vec![0.0; couplings.n()];
    evolver.distribution_into(t, &mut probs);
    Ok(SiteDistribution { probs })
}

pub fn concatenated_distribution(
    couplings: &CouplingString,
    probe: &ProbeState,
    grid: &TimeGrid,
) -> Result<ConcatenatedDistribution> {
    Ok(Evolver::new(couplings, probe)?.concatenated(grid))
}
