//! Exact entropies from full state vectors.
//!
//! Basis index convention: site 0 is the most significant base-`d` digit,
//! so `index = sum_k sigma_k * d^(L - 1 - k)`.

use std::io::{Read, Write};

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::EntropyProvider;
use crate::linalg;

/// Largest chain handled by the dense backend (qubits).
pub const MAX_DENSE_SITES: usize = 14;
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    sites: usize,
    local_dim: usize,
    amps: Vec<C64>,
}

impl DenseState {
    pub fn new(sites: usize, local_dim: usize, amps: Vec<C64>) -> Result<Self> {
        if local_dim < 2 || sites == 0 {
            return Err(Error::InvalidInput(format!(
                "need sites >= 1 and d >= 2, got L={sites}, d={local_dim}"
            )));
        }
        let expected = checked_pow(local_dim, sites)?;
        if amps.len() != expected {
            return Err(Error::InvalidInput(format!(
                "state has {} amplitudes, expected {expected}",
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(DenseState { sites, local_dim, amps })
    }

    /// Normalizes `amps` before validating.
    pub fn normalized(sites: usize, local_dim: usize, mut amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(sites, local_dim, amps)
    }

    pub fn from_real(sites: usize, amps: &[f64]) -> Result<Self> {
        Self::normalized(sites, 2, amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// `|0...0>`.
    pub fn product_zero(sites: usize) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); checked_pow(2, sites)?];
        amps[0] = C64::new(1.0, 0.0);
        Self::new(sites, 2, amps)
    }

    /// `(|0...0> + |1...1>) / sqrt(2)`.
    pub fn ghz(sites: usize) -> Result<Self> {
        let dim = checked_pow(2, sites)?;
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[0] = C64::new(0.5f64.sqrt(), 0.0);
        amps[dim - 1] = C64::new(0.5f64.sqrt(), 0.0);
        Self::new(sites, 2, amps)
    }

    /// Bell pairs `(|00> + |11>)/sqrt(2)` on sites `(0,1), (2,3), ...`;
    /// `sites` must be even.
    pub fn bell_pairs(sites: usize) -> Result<Self> {
        if !sites.is_multiple_of(2) {
            return Err(Error::InvalidInput("Bell-pair chain needs an even site count".into()));
        }
        let dim = checked_pow(2, sites)?;
        let pairs = sites / 2;
        let amp = C64::new(0.5f64.powf(pairs as f64 / 2.0), 0.0);
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        for pattern in 0..(1usize << pairs) {
            let mut index = 0usize;
            for p in 0..pairs {
                let bit = (pattern >> (pairs - 1 - p)) & 1;
                index = (index << 2) | (bit * 0b11);
            }
            amps[index] = amp;
        }
        Self::new(sites, 2, amps)
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &DenseState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Applies a `d x d` unitary (row-major) on one site.
    pub fn apply_site_unitary(&self, site: usize, unitary: &[C64]) -> Result<DenseState> {
        let d = self.local_dim;
        if site >= self.sites || unitary.len() != d * d {
            return Err(Error::InvalidInput("bad site or unitary shape".into()));
        }
        let right = d.pow((self.sites - site - 1) as u32);
        let left = self.amps.len() / (d * right);
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for a in 0..left {
            for c in 0..right {
                for s_out in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for s_in in 0..d {
                        acc += unitary[s_out * d + s_in] * self.amps[(a * d + s_in) * right + c];
                    }
                    out[(a * d + s_out) * right + c] = acc;
                }
            }
        }
        DenseState::normalized(self.sites, d, out)
    }

    /// Amplitudes as a `(d^m) x (d^(ell+1)) x (d^rest)` block, returned as
    /// the window-by-environment matrix `X[b, a * dc + c]`.
    fn window_matrix(&self, ell: usize, m: usize) -> Mat<C64> {
        let d = self.local_dim;
        let db = d.pow((ell + 1) as u32);
        let dc = d.pow((self.sites - m - ell - 1) as u32);
        let da = d.pow(m as u32);
        Mat::from_fn(db, da * dc, |b, col| {
            let (a, c) = (col / dc, col % dc);
            self.amps[(a * db + b) * dc + c]
        })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.sites as u32).to_le_bytes())?;
        w.write_all(&(self.local_dim as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let sites = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let local_dim = u32::from_le_bytes(word) as usize;
        if sites == 0 || sites > 64 || local_dim < 2 {
            return Err(Error::Parse(format!("bad state header L={sites}, d={local_dim}")));
        }
        let len = checked_pow(local_dim, sites)?;
        let mut bytes = vec![0u8; len * 16];
        r.read_exact(&mut bytes)?;
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                C64::new(re, im)
            })
            .collect();
        Self::new(sites, local_dim, amps)
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            sites: self.sites,
            local_dim: self.local_dim,
            amplitudes: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        };
        serde_json::to_string(&file).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        let amps = file.amplitudes.iter().map(|p| C64::new(p[0], p[1])).collect();
        Self::new(file.sites, file.local_dim, amps)
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    #[serde(rename = "L")]
    sites: usize,
    #[serde(rename = "d")]
    local_dim: usize,
    amplitudes: Vec<[f64; 2]>,
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    if exp > 40 {
        return Err(Error::TooLarge { sites: exp, limit: 40 });
    }
    base.checked_pow(exp as u32)
        .ok_or(Error::TooLarge { sites: exp, limit: 40 })
}

/// Hermitian, unit-trace matrix on `d^(ell+1)` states.
#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    pub matrix: Mat<C64>,
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }
}

/// Exact partial trace onto sites `m..=m + ell`.
pub fn reduced_density_matrix(state: &DenseState, ell: usize, m: usize) -> Result<ReducedDensityMatrix> {
    if m + ell >= state.sites {
        return Err(Error::SubsystemOutOfRange {
            ell,
            m,
            sites: state.sites,
        });
    }
    let x = state.window_matrix(ell, m);
    Ok(ReducedDensityMatrix {
        matrix: linalg::gram_rows(&x),
    })
}

pub fn entropy_bits(rho: &ReducedDensityMatrix) -> Result<f64> {
    linalg::entropy_from_spectrum(&rho.eigenvalues()?)
}

/// Draws a state with i.i.d. standard complex Gaussian amplitudes,
/// normalized; `ChaCha20` seeded from `seed`.
pub fn haar_random_state(sites: usize, seed: u64) -> Result<DenseState> {
    if sites > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            sites,
            limit: MAX_DENSE_SITES,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let amps = (0..1usize << sites)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    DenseState::normalized(sites, 2, amps)
}

/// Entropy provider over a pure dense state.
///
/// Edge windows use the Schmidt values of the reshaped amplitude vector;
/// bulk windows diagonalize the Gram matrix on whichever side of the
/// double cut is smaller (window or two-piece complement).
pub struct DenseEntropyProvider<'a> {
    state: &'a DenseState,
}

pub fn dense_entropy_provider(state: &DenseState) -> Result<DenseEntropyProvider<'_>> {
    if state.local_dim == 2 && state.sites > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            sites: state.sites,
            limit: MAX_DENSE_SITES,
        });
    }
    Ok(DenseEntropyProvider { state })
}

impl EntropyProvider for DenseEntropyProvider<'_> {
    fn num_sites(&self) -> usize {
        self.state.sites
    }

    fn local_dim(&self) -> usize {
        self.state.local_dim
    }

    fn subsystem_entropy(&mut self, ell: usize, m: usize) -> Result<f64> {
        let st = self.state;
        let l = st.sites;
        if m + ell >= l {
            return Err(Error::SubsystemOutOfRange { ell, m, sites: l });
        }
        if ell + 1 == l {
            return Ok(0.0);
        }
        let d = st.local_dim;
        let s = if m == 0 || m + ell + 1 == l {
            // single cut: left block of `cut` sites
            let cut = if m == 0 { ell + 1 } else { m };
            let rows = d.pow(cut as u32);
            let cols = st.amps.len() / rows;
            let psi = if rows <= cols {
                Mat::from_fn(rows, cols, |r, c| st.amps[r * cols + c])
            } else {
                Mat::from_fn(cols, rows, |c, r| st.amps[r * cols + c])
            };
            linalg::schmidt_entropy(&linalg::singular_values(&psi)?)?
        } else {
            let x = st.window_matrix(ell, m);
            let gram = if x.nrows() <= x.ncols() {
                &x * x.adjoint()
            } else {
                x.adjoint() * &x
            };
            linalg::hermitian_entropy(&gram)?
        };
        Ok(s.min((ell + 1) as f64 * (d as f64).log2()))
    }
}
