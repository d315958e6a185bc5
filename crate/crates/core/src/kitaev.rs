//! Disordered interacting Kitaev chain
//! `H = -i sum_j t_j g_j g_{j+1} + g sum_j g_j g_{j+1} g_{j+2} g_{j+3}`
//! on `L` sites (`2L` Majoranas), built through Jordan-Wigner in a Pauli
//! mask representation and diagonalized inside fermion-parity sectors.
//!
//! Conventions: site 0 is the most significant bit of a basis index, `|1>`
//! is an occupied mode, `c_j = Z_{<j} s^-_j`, so `g_{2j} = Z_{<j} X_j` and
//! `g_{2j+1} = -Z_{<j} Y_j` (0-indexed Majoranas). Parity sectors are those
//! of the occupation parity `(-1)^N = prod_j Z_j`.
//!
//! Disorder draws use `ChaCha20Rng::seed_from_u64`, with one `f64` per
//! coupling in index order.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseState, MAX_DENSE_SITES};
use crate::error::{Error, Result};
use crate::gaussian::MajoranaCoupling;
use crate::linalg;

/// Sectors up to this dimension are diagonalized in full; larger ones use
/// Lanczos (shift-invert at zero for midspectrum states).
pub const FULL_DIAG_LIMIT: usize = 1024;
/// `|E_1| = |E_2|` within this counts as a closest-to-zero tie.
pub const TIE_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitaevRealization {
    #[serde(rename = "L")]
    pub sites: usize,
    pub g: f64,
    pub delta: f64,
    pub seed: u64,
    pub t: Vec<f64>,
}

impl KitaevRealization {
    pub fn new(sites: usize, g: f64, delta: f64, seed: u64, t: Vec<f64>) -> Result<Self> {
        let r = KitaevRealization {
            sites,
            g,
            delta,
            seed,
            t,
        };
        r.validate()?;
        Ok(r)
    }

    /// Uniform couplings `t_odd = a`, `t_even = b` (1-indexed).
    pub fn clean(sites: usize, a: f64, b: f64, g: f64) -> Result<Self> {
        let t = (0..2 * sites.max(1) - 1)
            .map(|j| if j % 2 == 0 { a } else { b })
            .collect();
        Self::new(sites, g, 0.0, 0, t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::InvalidInput("chain needs at least one site".into()));
        }
        if self.t.len() != 2 * self.sites - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} couplings for L={}, got {}",
                2 * self.sites - 1,
                self.sites,
                self.t.len()
            )));
        }
        if !self.g.is_finite() || !self.delta.is_finite() || self.t.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn coupling(&self) -> Result<MajoranaCoupling> {
        MajoranaCoupling::from_hoppings(&self.t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("realization serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: KitaevRealization = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }
}

/// Couplings with `t_{2j-1}` uniform on `[0, e^{-delta/2}]` and `t_{2j}`
/// uniform on `[0, e^{delta/2}]`.
pub fn sample_disorder(sites: usize, delta: f64, g: f64, seed: u64) -> Result<KitaevRealization> {
    if sites < 2 {
        return Err(Error::InvalidInput(format!(
            "disordered chain needs L >= 2, got {sites}"
        )));
    }
    if !delta.is_finite() {
        return Err(Error::InvalidInput("delta must be finite".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (odd, even) = ((-delta / 2.0).exp(), (delta / 2.0).exp());
    let t = (0..2 * sites - 1)
        .map(|j| rng.gen::<f64>() * if j % 2 == 0 { odd } else { even })
        .collect();
    KitaevRealization::new(sites, g, delta, seed, t)
}

/// Shifted-Majorana dual: `t'_j = t_{j+1}`, last coupling 0, `delta -> -delta`.
/// The map is exact in the bulk only; the open boundary loses `t_1`.
pub fn duality_map(r: &KitaevRealization) -> KitaevRealization {
    let mut t: Vec<f64> = r.t.iter().skip(1).copied().collect();
    t.push(0.0);
    KitaevRealization {
        sites: r.sites,
        g: r.g,
        delta: -r.delta,
        seed: r.seed,
        t,
    }
}

/// `i^phase X^x Z^z` with masks in basis-index bit order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MajoranaString {
    pub x: u64,
    pub z: u64,
    pub phase: u8,
    pub sites: usize,
}

impl MajoranaString {
    pub fn identity(sites: usize) -> Self {
        MajoranaString {
            x: 0,
            z: 0,
            phase: 0,
            sites,
        }
    }

    /// Majorana `k` (0-indexed) on an `sites`-site chain.
    pub fn majorana(k: usize, sites: usize) -> Result<Self> {
        if k >= 2 * sites || sites > 63 {
            return Err(Error::InvalidInput(format!(
                "Majorana {k} outside chain of {sites} sites"
            )));
        }
        let j = k / 2;
        let bit = |s: usize| 1u64 << (sites - 1 - s);
        let string: u64 = (0..j).map(bit).fold(0, |a, b| a | b);
        Ok(if k.is_multiple_of(2) {
            MajoranaString {
                x: bit(j),
                z: string,
                phase: 0,
                sites,
            }
        } else {
            // -Z_< Y_j = -i Z_< X_j Z_j
            MajoranaString {
                x: bit(j),
                z: string | bit(j),
                phase: 3,
                sites,
            }
        })
    }

    pub fn mul(&self, other: &MajoranaString) -> MajoranaString {
        let swaps = (self.z & other.x).count_ones() as u8;
        MajoranaString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (self.phase + other.phase + 2 * swaps) % 4,
            sites: self.sites,
        }
    }

    pub fn product(indices: &[usize], sites: usize) -> Result<Self> {
        let mut acc = Self::identity(sites);
        for &k in indices {
            acc = acc.mul(&Self::majorana(k, sites)?);
        }
        Ok(acc)
    }

    pub fn coefficient(&self) -> C64 {
        [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ][self.phase as usize]
    }

    /// Image of basis state `s`: `(coefficient, s')`.
    pub fn apply(&self, s: u64) -> (C64, u64) {
        let sign = if (self.z & s).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        (self.coefficient() * sign, s ^ self.x)
    }

    /// Commutes with `prod_j Z_j` iff it flips an even number of bits.
    pub fn preserves_parity(&self) -> bool {
        self.x.count_ones().is_multiple_of(2)
    }
}

/// Real Pauli term `coeff * (-1)^{|z & s|} |s ^ x><s|`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    coeff: f64,
    x: u64,
    z: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn bit(self) -> u32 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Ground,
    ClosestToZero,
}

#[derive(Clone, Debug)]
pub struct KitaevHamiltonian {
    sites: usize,
    terms: Vec<Term>,
}

pub fn build_hamiltonian(r: &KitaevRealization) -> Result<KitaevHamiltonian> {
    r.validate()?;
    let l = r.sites;
    if l > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            sites: l,
            limit: MAX_DENSE_SITES,
        });
    }
    let mut terms = Vec::new();
    let mut push = |string: MajoranaString, scale: C64| -> Result<()> {
        let c = scale * string.coefficient();
        if c.im.abs() > 1e-14 * c.norm().max(1.0) {
            return Err(Error::Numerical("non-real Hamiltonian term".into()));
        }
        if c.re != 0.0 {
            terms.push(Term {
                coeff: c.re,
                x: string.x,
                z: string.z,
            });
        }
        Ok(())
    };
    for (k, &t) in r.t.iter().enumerate() {
        push(MajoranaString::product(&[k, k + 1], l)?, C64::new(0.0, -t))?;
    }
    if r.g != 0.0 {
        for k in 0..(2 * l).saturating_sub(3) {
            push(
                MajoranaString::product(&[k, k + 1, k + 2, k + 3], l)?,
                C64::new(r.g, 0.0),
            )?;
        }
    }
    Ok(KitaevHamiltonian { sites: l, terms })
}

impl KitaevHamiltonian {
    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    /// Sum of absolute term coefficients, an upper bound on `||H||`.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn preserves_parity(&self) -> bool {
        self.terms.iter().all(|t| t.x.count_ones() % 2 == 0)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.dim();
        let mut h = Mat::<f64>::zeros(n, n);
        for s in 0..n as u64 {
            for t in &self.terms {
                h[((s ^ t.x) as usize, s as usize)] += t.coeff * z_sign(t.z, s);
            }
        }
        h
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (s, &a) in v.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for t in &self.terms {
                out[s ^ t.x as usize] += t.coeff * z_sign(t.z, s as u64) * a;
            }
        }
        out
    }

    /// Basis indices of a parity sector, ascending.
    pub fn sector_basis(&self, parity: Parity) -> Vec<u64> {
        (0..self.dim() as u64)
            .filter(|s| s.count_ones() % 2 == parity.bit())
            .collect()
    }

    pub fn sector_matrix(&self, parity: Parity) -> Mat<f64> {
        let basis = self.sector_basis(parity);
        let mut position = vec![u32::MAX; self.dim()];
        for (i, &s) in basis.iter().enumerate() {
            position[s as usize] = i as u32;
        }
        let n = basis.len();
        let mut h = Mat::<f64>::zeros(n, n);
        for (col, &s) in basis.iter().enumerate() {
            for t in &self.terms {
                let row = position[(s ^ t.x) as usize] as usize;
                h[(row, col)] += t.coeff * z_sign(t.z, s);
            }
        }
        h
    }

    /// Requested eigenpair of a parity sector, embedded in the full space.
    pub fn sector_eigenpair(&self, parity: Parity, target: Target) -> Result<SectorEigenpair> {
        let basis = self.sector_basis(parity);
        let h = self.sector_matrix(parity);
        let (energy, vector, tie) = if basis.len() <= FULL_DIAG_LIMIT {
            full_selection(&h, target)?
        } else {
            match target {
                Target::Ground => {
                    let (e, v) = lanczos_extreme(basis.len(), |x| mat_vec(&h, x), Extreme::Lowest)?;
                    (e, v, false)
                }
                Target::ClosestToZero => shift_invert_selection(&h)?,
            }
        };
        let mut amps = vec![C64::new(0.0, 0.0); self.dim()];
        for (&s, &a) in basis.iter().zip(&vector) {
            amps[s as usize] = C64::new(a, 0.0);
        }
        let state = DenseState::normalized(self.sites, 2, amps)?;
        let pair = SectorEigenpair {
            energy,
            state,
            parity,
            tie_flag: tie,
        };
        let residual = pair.residual(self);
        if residual > RESIDUAL_TOL * self.norm_bound().max(1.0) {
            return Err(Error::Numerical(format!("eigenpair residual {residual:e}")));
        }
        Ok(pair)
    }

    /// Lowest-energy state over both parity sectors.
    pub fn ground_state(&self) -> Result<SectorEigenpair> {
        let even = self.sector_eigenpair(Parity::Even, Target::Ground)?;
        if self.sites == 0 {
            return Ok(even);
        }
        let odd = self.sector_eigenpair(Parity::Odd, Target::Ground)?;
        Ok(if odd.energy < even.energy { odd } else { even })
    }
}

fn z_sign(z: u64, s: u64) -> f64 {
    if (z & s).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug)]
pub struct SectorEigenpair {
    pub energy: f64,
    pub state: DenseState,
    pub parity: Parity,
    /// Closest-to-zero selection hit a `|E_1| = |E_2|` tie.
    pub tie_flag: bool,
}

impl SectorEigenpair {
    /// `<prod_j Z_j>`.
    pub fn parity_expectation(&self) -> f64 {
        self.state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(s, a)| a.norm_sqr() * z_sign(u64::MAX, s as u64))
            .sum()
    }

    /// `||H psi - E psi||`.
    pub fn residual(&self, h: &KitaevHamiltonian) -> f64 {
        let re: Vec<f64> = self.state.amplitudes().iter().map(|a| a.re).collect();
        let hv = h.apply(&re);
        hv.iter()
            .zip(&re)
            .map(|(a, b)| (a - self.energy * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Full sector eigendecomposition and selection.
fn full_selection(h: &Mat<f64>, target: Target) -> Result<(f64, Vec<f64>, bool)> {
    let (vals, vecs) = linalg::symmetric_eigen(h)?;
    let column = |i: usize| (0..h.nrows()).map(|r| vecs[(r, i)]).collect::<Vec<_>>();
    match target {
        Target::Ground => Ok((vals[0], column(0), false)),
        Target::ClosestToZero => {
            let mut order: Vec<usize> = (0..vals.len()).collect();
            order.sort_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()).then(a.cmp(&b)));
            let best = order[0];
            let tie = order
                .get(1)
                .is_some_and(|&second| (vals[second].abs() - vals[best].abs()).abs() < TIE_TOL);
            let chosen = if tie { best.min(order[1]) } else { best };
            Ok((vals[chosen], column(chosen), tie))
        }
    }
}

fn mat_vec(h: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = h.nrows();
    let mut out = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            let col = h.col(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o += col[i] * xj;
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Extreme {
    Lowest,
    LargestMagnitude,
}

/// Lanczos with full reorthogonalization; returns the requested Ritz pair
/// once its residual estimate is below `1e-12 * ||T||`.
fn lanczos_extreme<F>(n: usize, op: F, which: Extreme) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let pairs = lanczos(n, op, which, 1)?;
    Ok(pairs.into_iter().next().expect("one Ritz pair"))
}

fn lanczos<F>(n: usize, mut op: F, which: Extreme, want: usize) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let max_steps = n.min(300);
    let mut rng = ChaCha20Rng::seed_from_u64(0x1a2b_3c4d);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    loop {
        let k = basis.len() - 1;
        let mut w = op(&basis[k]);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let bnorm = dot(&w, &w).sqrt();
        let steps = alpha.len();
        let check = steps > want && (steps % 5 == 0 || steps == max_steps || bnorm < 1e-13);
        if check || steps == max_steps {
            let t = Mat::from_fn(steps, steps, |i, j| {
                if i == j {
                    alpha[i]
                } else if i == j + 1 {
                    beta[j]
                } else if j == i + 1 {
                    beta[i]
                } else {
                    0.0
                }
            });
            let (theta, y) = linalg::symmetric_eigen(&t)?;
            let mut order: Vec<usize> = (0..steps).collect();
            match which {
                Extreme::Lowest => {}
                Extreme::LargestMagnitude => order.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs())),
            }
            let scale = theta.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
            let converged = order
                .iter()
                .take(want)
                .all(|&i| (bnorm * y[(steps - 1, i)]).abs() < 1e-12 * scale);
            if converged || bnorm < 1e-13 || steps == max_steps {
                if !converged && bnorm >= 1e-13 {
                    return Err(Error::Numerical(format!("Lanczos did not converge in {steps} steps")));
                }
                return Ok(order
                    .iter()
                    .take(want)
                    .map(|&i| {
                        let mut vec = vec![0.0; n];
                        for (j, b) in basis.iter().enumerate() {
                            let c = y[(j, i)];
                            vec.iter_mut().zip(b).for_each(|(x, bb)| *x += c * bb);
                        }
                        let nn = dot(&vec, &vec).sqrt();
                        vec.iter_mut().for_each(|x| *x /= nn);
                        (theta[i], vec)
                    })
                    .collect());
            }
        }
        if bnorm < 1e-13 {
            return Err(Error::Numerical("Lanczos breakdown".into()));
        }
        beta.push(bnorm);
        w.iter_mut().for_each(|x| *x /= bnorm);
        basis.push(w);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closest-to-zero eigenpair from Lanczos on `H^{-1}`; falls back to full
/// diagonalization if the factorization is unusable.
fn shift_invert_selection(h: &Mat<f64>) -> Result<(f64, Vec<f64>, bool)> {
    let n = h.nrows();
    let lblt = h.lblt(Side::Lower);
    let solve = |x: &[f64]| -> Vec<f64> {
        let mut rhs = Mat::from_fn(n, 1, |i, _| x[i]);
        lblt.solve_in_place(rhs.as_mut());
        (0..n).map(|i| rhs[(i, 0)]).collect()
    };
    let pairs = match lanczos(n, solve, Extreme::LargestMagnitude, 2) {
        Ok(p) if p.iter().all(|(t, v)| t.is_finite() && v.iter().all(|x| x.is_finite())) => p,
        _ => return full_selection(h, Target::ClosestToZero),
    };
    // Rayleigh quotients in H itself
    let refined: Vec<(f64, Vec<f64>)> = pairs.into_iter().map(|(_, v)| (dot(&v, &mat_vec(h, &v)), v)).collect();
    let (e1, e2) = (refined[0].0, refined[1].0);
    let tie = (e1.abs() - e2.abs()).abs() < TIE_TOL;
    let pick = if tie && e2 < e1 { 1 } else { 0 };
    let (e, v) = refined.into_iter().nth(pick).expect("two Ritz pairs");
    Ok((e, v, tie))
}
