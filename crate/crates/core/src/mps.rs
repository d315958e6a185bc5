//! Matrix-product states and the window-entropy engine over them.
//!
//! Tensors are stored as `(left, physical, right)` arrays. After
//! [`MatrixProductState::canonicalize`] every site tensor is right-canonical
//! (`sum_s B^s B^s+ = 1`) and `singular_values[k]` holds the Schmidt values
//! across bond `k` (between sites `k-1` and `k`), so the window `m..=m+ell`
//! is described by `diag(L_m) B_m ... B_{m+ell}` with orthonormal
//! environments on both sides.
//!
//! Entropy routes:
//! - `SingleCut`: windows touching a chain end, from stored Schmidt values.
//! - `TransferMatrix`: Gram matrix of the window tensor, size `chi_L chi_R`.
//! - `ReducedDensityMatrix`: the window density matrix, size `d^(ell+1)`.
//! - `ComplementTransferMatrix`: density matrix of the complement built
//!   from the window transfer tensor with the window traced out (pure states).
//!
//! Window transfer tensors are accumulated site by site to the right and
//! kept in a FIFO cache keyed by the window's left bond, so that sweeping a
//! lattice in increasing `ell` extends each cached tensor by one site.

use std::collections::VecDeque;
use std::io::{Read, Write};

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseState, MAX_DENSE_SITES};
use crate::error::{Error, Result};
use crate::lattice::EntropyProvider;
use crate::linalg;

pub const DEFAULT_CACHE_CAPACITY: usize = 8;
/// Schmidt weights below this are dropped even without truncation.
const ZERO_WEIGHT: f64 = 1e-28;
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Canonical {
    None,
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    left: usize,
    phys: usize,
    right: usize,
    data: Vec<C64>,
}

impl SiteTensor {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<C64>) -> Result<Self> {
        if left == 0 || phys == 0 || right == 0 || data.len() != left * phys * right {
            return Err(Error::InvalidInput(format!(
                "tensor ({left},{phys},{right}) needs {} entries, got {}",
                left * phys * right,
                data.len()
            )));
        }
        Ok(SiteTensor {
            left,
            phys,
            right,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.left, self.phys, self.right)
    }

    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * self.phys + s) * self.right + b]
    }

    /// `(left * phys) x right` matrix.
    fn as_left_matrix(&self) -> Mat<C64> {
        Mat::from_fn(self.left * self.phys, self.right, |r, b| self.data[r * self.right + b])
    }

    /// `left x (phys * right)` matrix.
    fn as_right_matrix(&self) -> Mat<C64> {
        let cols = self.phys * self.right;
        Mat::from_fn(self.left, cols, |a, c| self.data[a * cols + c])
    }

    fn from_left_matrix(m: &Mat<C64>, phys: usize) -> Self {
        let (rows, right) = (m.nrows(), m.ncols());
        let data = (0..rows)
            .flat_map(|r| (0..right).map(move |b| (r, b)))
            .map(|(r, b)| m[(r, b)])
            .collect();
        SiteTensor {
            left: rows / phys,
            phys,
            right,
            data,
        }
    }

    fn from_right_matrix(m: &Mat<C64>, phys: usize) -> Self {
        let (left, cols) = (m.nrows(), m.ncols());
        let data = (0..left)
            .flat_map(|a| (0..cols).map(move |c| (a, c)))
            .map(|(a, c)| m[(a, c)])
            .collect();
        SiteTensor {
            left,
            phys,
            right: cols / phys,
            data,
        }
    }

    /// `B^s` as a `left x right` matrix.
    fn slice(&self, s: usize) -> Mat<C64> {
        Mat::from_fn(self.left, self.right, |a, b| self.get(a, s, b))
    }
}

#[derive(Clone, Debug)]
pub struct MatrixProductState {
    sites: usize,
    local_dim: usize,
    tensors: Vec<SiteTensor>,
    canonical: Vec<Canonical>,
    singular_values: Option<Vec<Vec<f64>>>,
    pure: bool,
    discarded_weight: f64,
}

impl MatrixProductState {
    pub fn new(tensors: Vec<SiteTensor>) -> Result<Self> {
        let sites = tensors.len();
        if sites == 0 {
            return Err(Error::InvalidInput("empty MPS".into()));
        }
        let local_dim = tensors[0].phys;
        if tensors[0].left != 1 || tensors[sites - 1].right != 1 {
            return Err(Error::InvalidInput("boundary bonds must have dimension 1".into()));
        }
        for (k, t) in tensors.iter().enumerate() {
            if t.phys != local_dim {
                return Err(Error::InvalidInput(format!(
                    "site {k} has physical dimension {}",
                    t.phys
                )));
            }
            if k + 1 < sites && t.right != tensors[k + 1].left {
                return Err(Error::InvalidInput(format!("bond {} dimensions disagree", k + 1)));
            }
        }
        Ok(MatrixProductState {
            sites,
            local_dim,
            canonical: vec![Canonical::None; sites],
            tensors,
            singular_values: None,
            pure: true,
            discarded_weight: 0.0,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn tensor(&self, k: usize) -> &SiteTensor {
        &self.tensors[k]
    }

    /// `chi_0 .. chi_L`.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.tensors.iter().map(|t| t.left).collect();
        dims.push(1);
        dims
    }

    pub fn canonical_flags(&self) -> &[Canonical] {
        &self.canonical
    }

    pub fn singular_values(&self, bond: usize) -> Option<&[f64]> {
        self.singular_values.as_ref().map(|sv| sv[bond].as_slice())
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    pub fn set_pure(&mut self, pure: bool) {
        self.pure = pure;
    }

    /// Total Schmidt weight discarded while compressing.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn is_right_canonical(&self) -> bool {
        self.singular_values.is_some() && self.canonical.iter().all(|c| *c == Canonical::Right)
    }

    /// Replace the stored Schmidt values of one bond (no consistency check).
    pub fn set_singular_values(&mut self, bond: usize, values: Vec<f64>) -> Result<()> {
        let dims = self.bond_dims();
        let sv = self
            .singular_values
            .as_mut()
            .ok_or_else(|| Error::InvalidInput("MPS has no singular values".into()))?;
        if bond > self.sites || values.len() != dims[bond] {
            return Err(Error::InvalidInput(format!(
                "bond {bond} expects {} values",
                dims[bond]
            )));
        }
        sv[bond] = values;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut env = Mat::<C64>::identity(1, 1);
        for t in &self.tensors {
            let mut next = Mat::<C64>::zeros(t.right, t.right);
            for s in 0..t.phys {
                let b = t.slice(s);
                next += b.adjoint() * &env * &b;
            }
            env = next;
        }
        env[(0, 0)].re
    }

    /// Max deviation from `sum_s B^s B^s+ = 1` over all sites.
    pub fn right_isometry_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for t in &self.tensors {
            let m = t.as_right_matrix();
            let g = &m * m.adjoint();
            for i in 0..t.left {
                for j in 0..t.left {
                    let id = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g[(i, j)] - C64::new(id, 0.0)).norm());
                }
            }
        }
        worst
    }

    /// Bring the state to right-canonical form with Schmidt values on
    /// every bond: a left-to-right sweep followed by a right-to-left SVD sweep.
    pub fn canonicalize(&mut self) -> Result<()> {
        let l = self.sites;
        let d = self.local_dim;
        for k in 0..l - 1 {
            let (u, s, v) = linalg::thin_svd(&self.tensors[k].as_left_matrix())?;
            let r = kept_rank(&s, 0.0, usize::MAX).0;
            let u = u.subcols(0, r).to_owned();
            let carry = Mat::from_fn(r, v.nrows(), |i, j| v[(j, i)].conj() * s[i]);
            self.tensors[k] = SiteTensor::from_left_matrix(&u, d);
            let next = &carry * self.tensors[k + 1].as_right_matrix();
            self.tensors[k + 1] = SiteTensor::from_right_matrix(&next, d);
        }
        let mut lambdas = vec![vec![1.0]; l + 1];
        for k in (1..l).rev() {
            let (u, s, v) = linalg::thin_svd(&self.tensors[k].as_right_matrix())?;
            let r = kept_rank(&s, 0.0, usize::MAX).0;
            let vh = Mat::from_fn(r, v.nrows(), |i, j| v[(j, i)].conj());
            self.tensors[k] = SiteTensor::from_right_matrix(&vh, d);
            let us = Mat::from_fn(u.nrows(), r, |i, j| u[(i, j)] * s[j]);
            let prev = self.tensors[k - 1].as_left_matrix() * &us;
            self.tensors[k - 1] = SiteTensor::from_left_matrix(&prev, d);
            lambdas[k] = s[..r].to_vec();
        }
        let norm: f64 = self.tensors[0].data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::Numerical("MPS has zero norm".into()));
        }
        self.tensors[0].data.iter_mut().for_each(|z| *z /= norm);
        for lam in lambdas.iter_mut().skip(1).take(l.saturating_sub(1)) {
            lam.iter_mut().for_each(|x| *x /= norm);
        }
        self.singular_values = Some(lambdas);
        self.canonical = vec![Canonical::Right; l];
        Ok(())
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        if self.sites > MAX_DENSE_SITES {
            return Err(Error::TooLarge {
                sites: self.sites,
                limit: MAX_DENSE_SITES,
            });
        }
        let mut acc = Mat::<C64>::identity(1, 1);
        for t in &self.tensors {
            let prod = &acc * t.as_right_matrix();
            acc = Mat::from_fn(prod.nrows() * t.phys, t.right, |r, b| {
                prod[(r / t.phys, (r % t.phys) * t.right + b)]
            });
        }
        let amps = (0..acc.nrows()).map(|i| acc[(i, 0)]).collect();
        DenseState::normalized(self.sites, self.local_dim, amps)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let header = MpsHeader {
            sites: self.sites,
            d: self.local_dim,
            bond_dims: self.bond_dims(),
            canonical: self.canonical.clone(),
            singular_values: self.singular_values.clone(),
            pure: self.pure,
            discarded_weight: self.discarded_weight,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for t in &self.tensors {
            for z in &t.data {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a header line and tensor payload. Canonical flags and Schmidt
    /// values are taken from the file as given.
    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Parse("MPS file has no header line".into()))?;
        let header: MpsHeader = serde_json::from_slice(&bytes[..split])?;
        let dims = &header.bond_dims;
        if dims.len() != header.sites + 1 || header.sites == 0 || header.d == 0 {
            return Err(Error::Parse("bond_dims must have L+1 entries".into()));
        }
        let mut payload = &bytes[split + 1..];
        let mut tensors = Vec::with_capacity(header.sites);
        for k in 0..header.sites {
            let n = dims[k] * header.d * dims[k + 1];
            if payload.len() < 16 * n {
                return Err(Error::Parse(format!("payload truncated at site {k}")));
            }
            let data = payload[..16 * n]
                .chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    C64::new(re, im)
                })
                .collect();
            payload = &payload[16 * n..];
            tensors.push(SiteTensor::new(dims[k], header.d, dims[k + 1], data)?);
        }
        if !payload.is_empty() {
            return Err(Error::Parse(format!("{} trailing bytes after payload", payload.len())));
        }
        let mut mps = MatrixProductState::new(tensors)?;
        if header.canonical.len() != header.sites {
            return Err(Error::Parse("canonical flags must have L entries".into()));
        }
        if let Some(sv) = &header.singular_values {
            if sv.len() != header.sites + 1 || sv.iter().zip(dims).any(|(s, &c)| s.len() != c) {
                return Err(Error::Parse("singular_values do not match bond_dims".into()));
            }
        }
        mps.canonical = header.canonical;
        mps.singular_values = header.singular_values;
        mps.pure = header.pure;
        mps.discarded_weight = header.discarded_weight;
        let norm = mps.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("MPS norm^2 = {norm}, expected 1")));
        }
        Ok(mps)
    }
}

#[derive(Serialize, Deserialize)]
struct MpsHeader {
    #[serde(rename = "L")]
    sites: usize,
    d: usize,
    bond_dims: Vec<usize>,
    canonical: Vec<Canonical>,
    #[serde(default)]
    singular_values: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_pure")]
    pure: bool,
    #[serde(default)]
    discarded_weight: f64,
}

fn default_pure() -> bool {
    true
}

/// Smallest rank whose discarded weight is within `eps` (and `ZERO_WEIGHT`),
/// capped at `chi_max`; returns the rank and the discarded weight.
fn kept_rank(s: &[f64], eps: f64, chi_max: usize) -> (usize, f64) {
    let budget = eps.max(ZERO_WEIGHT);
    let mut r = s.len();
    let mut tail = 0.0;
    while r > 1 && tail + s[r - 1] * s[r - 1] <= budget {
        tail += s[r - 1] * s[r - 1];
        r -= 1;
    }
    while r > chi_max.max(1) {
        tail += s[r - 1] * s[r - 1];
        r -= 1;
    }
    (r, tail)
}

/// Left-to-right SVD compression of a dense state, returned in
/// right-canonical form.
pub fn mps_from_dense(state: &DenseState, chi_max: usize, trunc_eps: f64) -> Result<MatrixProductState> {
    let l = state.num_sites();
    let d = state.local_dim();
    if l > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            sites: l,
            limit: MAX_DENSE_SITES,
        });
    }
    if chi_max == 0 || trunc_eps.is_nan() || trunc_eps < 0.0 {
        return Err(Error::InvalidInput(
            "chi_max must be positive and trunc_eps non-negative".into(),
        ));
    }
    let amps = state.amplitudes();
    let mut rest = amps.len() / d;
    let mut rem = Mat::from_fn(d, rest, |i, j| amps[i * rest + j]);
    let mut tensors = Vec::with_capacity(l);
    let mut discarded = 0.0;
    for _ in 0..l - 1 {
        let (u, s, v) = linalg::thin_svd(&rem)?;
        let (r, tail) = kept_rank(&s, trunc_eps, chi_max);
        discarded += tail;
        let kept_norm = s[..r].iter().map(|x| x * x).sum::<f64>().sqrt();
        tensors.push(SiteTensor::from_left_matrix(&u.subcols(0, r).to_owned(), d));
        rest /= d;
        rem = Mat::from_fn(r * d, rest, |row, col| {
            let (i, sigma) = (row / d, row % d);
            v[(sigma * rest + col, i)].conj() * (s[i] / kept_norm)
        });
    }
    let last = Mat::from_fn(rem.nrows() / d, d, |a, s| rem[(a * d + s, 0)]);
    tensors.push(SiteTensor::from_right_matrix(&last, d));
    let mut mps = MatrixProductState::new(tensors)?;
    mps.discarded_weight = discarded;
    mps.canonicalize()?;
    Ok(mps)
}

/// Entropy of the left block `0..bond` from stored Schmidt values.
pub fn single_cut_entropy(mps: &mut MatrixProductState, bond: usize) -> Result<f64> {
    if bond > mps.sites {
        return Err(Error::InvalidInput(format!("bond {bond} outside 0..={}", mps.sites)));
    }
    if !mps.is_right_canonical() {
        mps.canonicalize()?;
    }
    linalg::schmidt_entropy(mps.singular_values(bond).expect("canonical"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntropyStrategy {
    SingleCut,
    TransferMatrix,
    ReducedDensityMatrix,
    ComplementTransferMatrix,
}

impl EntropyStrategy {
    pub const ALL: [EntropyStrategy; 4] = [
        EntropyStrategy::SingleCut,
        EntropyStrategy::TransferMatrix,
        EntropyStrategy::ReducedDensityMatrix,
        EntropyStrategy::ComplementTransferMatrix,
    ];

    /// Rank in the tie-break order (lower wins).
    fn priority(self) -> usize {
        match self {
            EntropyStrategy::TransferMatrix => 0,
            EntropyStrategy::SingleCut => 1,
            EntropyStrategy::ComplementTransferMatrix => 2,
            EntropyStrategy::ReducedDensityMatrix => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyChoice {
    pub strategy: EntropyStrategy,
    /// Predicted multiply-add count.
    pub cost: f64,
}

/// Shape information the cost model needs about one window query.
#[derive(Clone, Debug)]
pub struct WindowQuery<'a> {
    pub bond_dims: &'a [usize],
    pub local_dim: usize,
    pub ell: usize,
    pub m: usize,
    /// Sites of the window transfer tensor already available from the cache.
    pub cached_sites: usize,
    pub pure: bool,
}

impl WindowQuery<'_> {
    fn sites(&self) -> usize {
        self.bond_dims.len() - 1
    }

    fn is_edge(&self) -> bool {
        self.m == 0 || self.m + self.ell == self.sites() - 1
    }

    /// Cost of extending the window transfer tensor over the uncached sites.
    fn transfer_contraction(&self) -> f64 {
        let chi = |k: usize| self.bond_dims[k] as f64;
        let d = self.local_dim as f64;
        let a = chi(self.m);
        (self.m + self.cached_sites..=self.m + self.ell)
            .map(|k| a * a * d * chi(k) * chi(k + 1) * (chi(k) + chi(k + 1)))
            .sum()
    }
}

/// Predicted cost of each applicable route.
pub fn strategy_costs(q: &WindowQuery<'_>) -> Vec<StrategyChoice> {
    let l = q.sites();
    let chi = |k: usize| q.bond_dims[k] as f64;
    let d = q.local_dim as f64;
    let (chi_l, chi_r) = (chi(q.m), chi(q.m + q.ell + 1));
    let mut out = Vec::with_capacity(4);
    if q.is_edge() {
        let bond = if q.m == 0 { q.m + q.ell + 1 } else { q.m };
        out.push(StrategyChoice {
            strategy: EntropyStrategy::SingleCut,
            cost: chi(bond).max(1.0),
        });
    }
    let tm = q.transfer_contraction() + (chi_l * chi_r).powi(3);
    out.push(StrategyChoice {
        strategy: EntropyStrategy::TransferMatrix,
        cost: tm.max(1.0),
    });
    let window_dim = d.powi(q.ell as i32 + 1);
    let build: f64 = (0..=q.ell)
        .map(|j| chi_l * d.powi(j as i32 + 1) * chi(q.m + j) * chi(q.m + j + 1))
        .sum();
    let rdm = build + window_dim * window_dim * chi_l * chi_r + window_dim.powi(3);
    out.push(StrategyChoice {
        strategy: EntropyStrategy::ReducedDensityMatrix,
        cost: rdm.max(1.0),
    });
    if q.pure && q.ell >= l / 2 {
        let rest = l - q.m - q.ell - 1;
        let comp_dim = d.powi((l - q.ell - 1) as i32);
        let pieces: f64 = (0..q.m)
            .map(|k| d.powi(k as i32 + 1) * chi(k) * chi(k + 1))
            .chain(
                (0..rest).map(|j| chi_r * d.powi(j as i32 + 1) * chi(q.m + q.ell + 1 + j) * chi(q.m + q.ell + 2 + j)),
            )
            .sum();
        let pair = chi_l * chi_r;
        let cost =
            q.transfer_contraction() + pieces + comp_dim * pair * pair + comp_dim * comp_dim * pair + comp_dim.powi(3);
        out.push(StrategyChoice {
            strategy: EntropyStrategy::ComplementTransferMatrix,
            cost: cost.max(1.0),
        });
    }
    out
}

/// Cheapest route; ties go to TransferMatrix, SingleCut, Complement, RDM.
pub fn choose_strategy(q: &WindowQuery<'_>) -> StrategyChoice {
    strategy_costs(q)
        .into_iter()
        .min_by(|a, b| {
            a.cost
                .total_cmp(&b.cost)
                .then(a.strategy.priority().cmp(&b.strategy.priority()))
        })
        .expect("transfer matrix always applies")
}

/// Direction in which a cached transfer tensor has been accumulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
}

/// `E[(a,c),(a',c')] = sum_s W^s[a,c] conj(W^s[a',c'])` for `W = B_m ... B_k`.
#[derive(Clone, Debug)]
struct WindowTransfer {
    left: usize,
    /// Number of sites accumulated.
    len: usize,
    right: usize,
    e: Mat<C64>,
}

impl WindowTransfer {
    fn empty(chi: usize) -> Self {
        let e = Mat::from_fn(chi * chi, chi * chi, |r, c| {
            let (a, b) = (r / chi, r % chi);
            let (a2, b2) = (c / chi, c % chi);
            if a == b && a2 == b2 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        WindowTransfer {
            left: chi,
            len: 0,
            right: chi,
            e,
        }
    }

    fn extend(&mut self, t: &SiteTensor) {
        let (a_dim, c_dim, e_dim) = (self.left, self.right, t.right);
        let mut next = Mat::<C64>::zeros(a_dim * e_dim, a_dim * e_dim);
        for s in 0..t.phys {
            let b = t.slice(s);
            let b_conj = Mat::from_fn(c_dim, e_dim, |i, j| b[(i, j)].conj());
            let bt = b.transpose().to_owned();
            // Y[(a,c),(a',e')] = sum_c' E[(a,c),(a',c')] conj(B[c',e'])
            let mut y = Mat::<C64>::zeros(a_dim * c_dim, a_dim * e_dim);
            for a2 in 0..a_dim {
                let block = self.e.submatrix(0, a2 * c_dim, a_dim * c_dim, c_dim) * &b_conj;
                y.submatrix_mut(0, a2 * e_dim, a_dim * c_dim, e_dim).copy_from(&block);
            }
            // E'[(a,e),(a',e')] += sum_c B[c,e] Y[(a,c),(a',e')]
            for a in 0..a_dim {
                let rows = &bt * y.submatrix(a * c_dim, 0, c_dim, a_dim * e_dim);
                let mut dst = next.submatrix_mut(a * e_dim, 0, e_dim, a_dim * e_dim);
                dst += &rows;
            }
        }
        self.e = next;
        self.right = e_dim;
        self.len += 1;
    }
}

/// Contraction diagnostics of an MPS provider.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ContractionStats {
    /// Site tensors contracted into window or environment objects.
    pub contractions: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub single_cut: u64,
    pub transfer_matrix: u64,
    pub reduced_density_matrix: u64,
    pub complement: u64,
}

pub struct MpsEntropyProvider {
    mps: MatrixProductState,
    capacity: usize,
    cache: VecDeque<((usize, Direction), WindowTransfer)>,
    stats: ContractionStats,
}

/// Provider answering each window with the cheapest route. The MPS is
/// canonicalized first unless it is already flagged right-canonical.
pub fn mps_entropy_provider(mps: &MatrixProductState, cache_capacity: usize) -> Result<MpsEntropyProvider> {
    let mut mps = mps.clone();
    if !mps.is_right_canonical() {
        mps.canonicalize()?;
    }
    Ok(MpsEntropyProvider {
        mps,
        capacity: cache_capacity,
        cache: VecDeque::new(),
        stats: ContractionStats::default(),
    })
}

impl MpsEntropyProvider {
    pub fn stats(&self) -> &ContractionStats {
        &self.stats
    }

    pub fn mps(&self) -> &MatrixProductState {
        &self.mps
    }

    fn cached_sites(&self, m: usize, ell: usize) -> usize {
        self.cache
            .iter()
            .find(|(k, _)| *k == (m, Direction::Right))
            .map(|(_, w)| if w.len <= ell + 1 { w.len } else { 0 })
            .unwrap_or(0)
    }

    pub fn plan(&self, ell: usize, m: usize) -> StrategyChoice {
        let dims = self.mps.bond_dims();
        choose_strategy(&WindowQuery {
            bond_dims: &dims,
            local_dim: self.mps.local_dim,
            ell,
            m,
            cached_sites: self.cached_sites(m, ell),
            pure: self.mps.pure,
        })
    }

    /// Transfer tensor of window `m..=m+ell`, reusing and refreshing the cache.
    fn window_transfer(&mut self, ell: usize, m: usize) -> WindowTransfer {
        let key = (m, Direction::Right);
        let pos = self.cache.iter().position(|(k, w)| *k == key && w.len <= ell + 1);
        let mut w = match pos.and_then(|p| self.cache.remove(p)) {
            Some((_, w)) => {
                self.stats.cache_hits += 1;
                w
            }
            None => {
                if self.capacity > 0 {
                    self.stats.cache_misses += 1;
                }
                WindowTransfer::empty(self.mps.tensors[m].left)
            }
        };
        while w.len < ell + 1 {
            w.extend(&self.mps.tensors[m + w.len]);
            self.stats.contractions += 1;
        }
        if self.capacity > 0 {
            self.cache.retain(|(k, _)| *k != key);
            self.cache.push_back((key, w.clone()));
            while self.cache.len() > self.capacity {
                self.cache.pop_front();
            }
        }
        w
    }

    /// Entropy of window `m..=m+ell` by an explicit route.
    pub fn window_entropy(&mut self, ell: usize, m: usize, strategy: EntropyStrategy) -> Result<f64> {
        let l = self.mps.sites;
        if m + ell >= l {
            return Err(Error::SubsystemOutOfRange { ell, m, sites: l });
        }
        match strategy {
            EntropyStrategy::SingleCut => {
                self.stats.single_cut += 1;
                let bond = if m == 0 {
                    ell + 1
                } else if m + ell == l - 1 {
                    m
                } else {
                    return Err(Error::InvalidInput(format!("window ({ell},{m}) has two cuts")));
                };
                linalg::schmidt_entropy(self.mps.singular_values(bond).expect("canonical"))
            }
            EntropyStrategy::TransferMatrix => {
                self.stats.transfer_matrix += 1;
                let w = self.window_transfer(ell, m);
                let lam = self.mps.singular_values(m).expect("canonical").to_vec();
                let r = w.right;
                let t = Mat::from_fn(w.e.nrows(), w.e.ncols(), |i, j| w.e[(i, j)] * (lam[i / r] * lam[j / r]));
                linalg::hermitian_entropy(&t)
            }
            EntropyStrategy::ReducedDensityMatrix => {
                self.stats.reduced_density_matrix += 1;
                self.rdm_entropy(ell, m)
            }
            EntropyStrategy::ComplementTransferMatrix => {
                if !self.mps.pure {
                    return Err(Error::MixedState);
                }
                self.stats.complement += 1;
                self.complement_entropy(ell, m)
            }
        }
    }

    fn rdm_entropy(&mut self, ell: usize, m: usize) -> Result<f64> {
        let lam = self.mps.singular_values(m).expect("canonical");
        let chi_l = lam.len();
        // rows (a, sigma...), columns: current right bond
        let mut w = Mat::from_fn(chi_l, chi_l, |i, j| {
            if i == j {
                C64::new(lam[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        for k in m..=m + ell {
            w = absorb_right(&w, &self.mps.tensors[k]);
            self.stats.contractions += 1;
        }
        let dim = w.nrows() / chi_l;
        let mut rho = Mat::<C64>::zeros(dim, dim);
        for a in 0..chi_l {
            let block = w.submatrix(a * dim, 0, dim, w.ncols());
            rho += block * block.adjoint();
        }
        linalg::hermitian_entropy(&rho)
    }

    fn complement_entropy(&mut self, ell: usize, m: usize) -> Result<f64> {
        let l = self.mps.sites;
        let w = self.window_transfer(ell, m);
        // left piece: rows sigma_L, columns bond m
        let mut kl = Mat::<C64>::identity(1, 1);
        for k in 0..m {
            kl = absorb_right(&kl, &self.mps.tensors[k]);
            self.stats.contractions += 1;
        }
        // right piece: rows (e, sigma_R), single column
        let chi_r = w.right;
        let mut kr = Mat::<C64>::identity(chi_r, chi_r);
        for k in m + ell + 1..l {
            kr = absorb_right(&kr, &self.mps.tensors[k]);
            self.stats.contractions += 1;
        }
        let dl = kl.nrows();
        let dr = kr.nrows() / chi_r;
        let chi_l = w.left;
        let k = Mat::from_fn(dl * dr, chi_l * chi_r, |row, col| {
            let (sl, sr) = (row / dr, row % dr);
            let (c, e) = (col / chi_r, col % chi_r);
            kl[(sl, c)] * kr[(e * dr + sr, 0)]
        });
        let rho = &k * &w.e * k.adjoint();
        linalg::hermitian_entropy(&rho)
    }
}

/// `W[(r), c] -> W'[(r, s), e] = sum_c W[r,c] B[c,s,e]`.
fn absorb_right(w: &Mat<C64>, t: &SiteTensor) -> Mat<C64> {
    let prod = w * t.as_right_matrix();
    Mat::from_fn(prod.nrows() * t.phys, t.right, |row, e| {
        prod[(row / t.phys, (row % t.phys) * t.right + e)]
    })
}

impl EntropyProvider for MpsEntropyProvider {
    fn num_sites(&self) -> usize {
        self.mps.sites
    }

    fn local_dim(&self) -> usize {
        self.mps.local_dim
    }

    fn subsystem_entropy(&mut self, ell: usize, m: usize) -> Result<f64> {
        let l = self.mps.sites;
        if m + ell >= l {
            return Err(Error::SubsystemOutOfRange { ell, m, sites: l });
        }
        let choice = self.plan(ell, m);
        self.window_entropy(ell, m, choice.strategy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{dense_entropy_provider, haar_random_state};
    use crate::lattice::{local_information, EntropyTable};
    use approx::assert_abs_diff_eq;

    #[test]
    fn product_and_ghz_bond_dimensions() {
        let p = mps_from_dense(&DenseState::product_zero(6).unwrap(), 64, 0.0).unwrap();
        assert!(p.bond_dims().iter().all(|&c| c == 1));
        let mut g = mps_from_dense(&DenseState::ghz(6).unwrap(), 64, 0.0).unwrap();
        assert_eq!(g.bond_dims(), vec![1, 2, 2, 2, 2, 2, 1]);
        for bond in 1..6 {
            let s = g.singular_values(bond).unwrap();
            assert_abs_diff_eq!(s[0], 0.5f64.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(s[1], 0.5f64.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(single_cut_entropy(&mut g, bond).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_compression_reconstructs_state() {
        let st = haar_random_state(10, 4).unwrap();
        let mps = mps_from_dense(&st, 1 << 5, 0.0).unwrap();
        assert!(mps.right_isometry_error() < 1e-10);
        assert_abs_diff_eq!(mps.norm_sqr(), 1.0, epsilon = 1e-10);
        let back = mps.to_dense().unwrap();
        assert!(back.overlap(&st).norm() > 1.0 - 1e-10);
    }

    #[test]
    fn single_cut_matches_dense() {
        let st = haar_random_state(10, 8).unwrap();
        let mut mps = mps_from_dense(&st, 64, 0.0).unwrap();
        let mut dense = dense_entropy_provider(&st).unwrap();
        for bond in 1..10 {
            let want = dense.subsystem_entropy(bond - 1, 0).unwrap();
            assert_abs_diff_eq!(single_cut_entropy(&mut mps, bond).unwrap(), want, epsilon = 1e-9);
        }
    }

    #[test]
    fn all_routes_agree_with_dense() {
        let st = haar_random_state(8, 21).unwrap();
        let mps = mps_from_dense(&st, 64, 0.0).unwrap();
        let mut p = mps_entropy_provider(&mps, 0).unwrap();
        let mut dense = dense_entropy_provider(&st).unwrap();
        for ell in 0..8 {
            for m in 0..8 - ell {
                let want = dense.subsystem_entropy(ell, m).unwrap();
                for strategy in EntropyStrategy::ALL {
                    let applicable = match strategy {
                        EntropyStrategy::SingleCut => m == 0 || m + ell == 7,
                        EntropyStrategy::ComplementTransferMatrix => ell >= 4,
                        _ => true,
                    };
                    if applicable {
                        let got = p.window_entropy(ell, m, strategy).unwrap();
                        assert_abs_diff_eq!(got, want, epsilon = 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn ghz_window_is_one_bit() {
        let mps = mps_from_dense(&DenseState::ghz(6).unwrap(), 8, 0.0).unwrap();
        let mut p = mps_entropy_provider(&mps, 4).unwrap();
        for strategy in [EntropyStrategy::TransferMatrix, EntropyStrategy::ReducedDensityMatrix] {
            assert_abs_diff_eq!(p.window_entropy(1, 2, strategy).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            p.window_entropy(5, 0, EntropyStrategy::ComplementTransferMatrix)
                .unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn transfer_and_density_spectra_coincide() {
        let st = haar_random_state(8, 2).unwrap();
        let mps = mps_from_dense(&st, 64, 0.0).unwrap();
        let mut p = mps_entropy_provider(&mps, 0).unwrap();
        let w = p.window_transfer(1, 3);
        let lam = p.mps.singular_values(3).unwrap().to_vec();
        let r = w.right;
        let t = Mat::from_fn(w.e.nrows(), w.e.ncols(), |i, j| w.e[(i, j)] * (lam[i / r] * lam[j / r]));
        let mut tm: Vec<f64> = linalg::hermitian_eigenvalues(&t)
            .unwrap()
            .into_iter()
            .filter(|x| *x > 1e-12)
            .collect();
        let rho = crate::dense::reduced_density_matrix(&st, 1, 3).unwrap();
        let mut rd: Vec<f64> = rho.eigenvalues().unwrap().into_iter().filter(|x| *x > 1e-12).collect();
        tm.sort_by(f64::total_cmp);
        rd.sort_by(f64::total_cmp);
        assert_eq!(tm.len(), rd.len());
        for (a, b) in tm.iter().zip(&rd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn cost_model_examples() {
        let flat =
            |chi: usize, l: usize| -> Vec<usize> { (0..=l).map(|k| if k == 0 || k == l { 1 } else { chi }).collect() };
        let unit = flat(1, 8);
        let q = WindowQuery {
            bond_dims: &unit,
            local_dim: 2,
            ell: 1,
            m: 3,
            cached_sites: 0,
            pure: true,
        };
        assert_eq!(choose_strategy(&q).strategy, EntropyStrategy::TransferMatrix);
        let four = flat(4, 20);
        let q = WindowQuery {
            bond_dims: &four,
            local_dim: 2,
            ell: 10,
            m: 3,
            cached_sites: 0,
            pure: true,
        };
        assert_eq!(choose_strategy(&q).strategy, EntropyStrategy::TransferMatrix);
        let wide = flat(256, 20);
        let q = WindowQuery {
            bond_dims: &wide,
            local_dim: 2,
            ell: 2,
            m: 5,
            cached_sites: 0,
            pure: true,
        };
        assert_eq!(choose_strategy(&q).strategy, EntropyStrategy::ReducedDensityMatrix);
        assert!(strategy_costs(&q).iter().all(|c| c.cost > 0.0));
    }

    #[test]
    fn cache_is_transparent_and_saves_work() {
        let st = haar_random_state(10, 13).unwrap();
        let mps = mps_from_dense(&st, 64, 0.0).unwrap();
        let mut cold = mps_entropy_provider(&mps, 0).unwrap();
        let mut warm = mps_entropy_provider(&mps, DEFAULT_CACHE_CAPACITY).unwrap();
        let a = EntropyTable::compute(&mut cold, 9).unwrap();
        let b = EntropyTable::compute(&mut warm, 9).unwrap();
        for ell in 0..10 {
            for m in 0..10 - ell {
                assert_abs_diff_eq!(a.get(ell, m), b.get(ell, m), epsilon = 1e-12);
            }
        }
        assert!(warm.stats().contractions < cold.stats().contractions);
        assert!(warm.stats().cache_hits > 0);
    }

    #[test]
    fn lattice_matches_dense() {
        let st = haar_random_state(9, 5).unwrap();
        let mps = mps_from_dense(&st, 64, 0.0).unwrap();
        let a = local_information(&mut mps_entropy_provider(&mps, 8).unwrap()).unwrap();
        let b = local_information(&mut dense_entropy_provider(&st).unwrap()).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!(x.1, y.1, epsilon = 1e-8);
        }
    }

    #[test]
    fn truncation_is_recorded() {
        let st = haar_random_state(8, 1).unwrap();
        let mps = mps_from_dense(&st, 4, 0.0).unwrap();
        assert!(mps.bond_dims().iter().all(|&c| c <= 4));
        assert!(mps.discarded_weight() > 0.0);
        assert_abs_diff_eq!(mps.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn file_round_trip_and_trusted_flags() {
        let mps = mps_from_dense(&DenseState::ghz(4).unwrap(), 8, 0.0).unwrap();
        let mut buf = Vec::new();
        mps.write(&mut buf).unwrap();
        let back = MatrixProductState::read(&buf[..]).unwrap();
        assert_eq!(back.bond_dims(), mps.bond_dims());
        assert!(back.is_right_canonical());
        assert_eq!(back.singular_values(2), mps.singular_values(2));
        assert!(MatrixProductState::read(&buf[..buf.len() - 3]).is_err());

        let mut planted = back.clone();
        planted.set_singular_values(2, vec![1.0, 0.0]).unwrap();
        let err = local_information(&mut mps_entropy_provider(&planted, 8).unwrap()).unwrap_err();
        assert!(matches!(err, Error::SsaViolation { .. }));
    }

    #[test]
    fn mixed_flag_refuses_complement() {
        let mut mps = mps_from_dense(&DenseState::ghz(4).unwrap(), 8, 0.0).unwrap();
        mps.set_pure(false);
        let mut p = mps_entropy_provider(&mps, 0).unwrap();
        assert!(matches!(
            p.window_entropy(2, 0, EntropyStrategy::ComplementTransferMatrix),
            Err(Error::MixedState)
        ));
    }
}
