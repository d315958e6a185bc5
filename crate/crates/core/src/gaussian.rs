//! Free-fermion (Gaussian) states of quadratic Majorana Hamiltonians
//! `H = (i/4) sum_jk A_jk g_j g_k` with nearest-neighbour couplings.
//!
//! The ground state is encoded by its real antisymmetric covariance matrix
//! `M_jk = (i/2) <[g_j, g_k]>`, and subsystem entropies follow from the
//! spectrum of the restricted block.
//!
//! Because `A` only couples neighbouring Majoranas, the phase transform
//! `u_j -> i^j u_j` maps `iA` onto a real symmetric tridiagonal matrix `T`.
//! Each eigenvector of `T` with energy `e >= 0` then yields the canonical
//! pair `(a, b)` as its even- and odd-indexed parts, which keeps the pairing
//! exact even when `e` and `-e` are not resolved numerically.

use std::collections::HashMap;
use std::io::Write;

use faer::Mat;

use crate::error::{Error, Result};
use crate::io::{data_lines, fmt_f64};
use crate::lattice::EntropyProvider;
use crate::linalg;

/// Single-particle energies below this count as zero modes.
pub const ZERO_MODE_TOL: f64 = 1e-12;
const PURITY_TOL: f64 = 1e-8;
/// Energies closer than this (relative to the largest) are treated as one
/// cluster; solver mixing inside a cluster is undone by re-pairing.
const CLUSTER_GAP: f64 = 1e-4;
const NU_TOL: f64 = 1e-10;

/// Nearest-neighbour Majorana couplings: `A_{j,j+1} = -2 t_j = -A_{j+1,j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MajoranaCoupling {
    hoppings: Vec<f64>,
}

impl MajoranaCoupling {
    /// `hoppings` holds `t_1 .. t_{2L-1}`.
    pub fn from_hoppings(hoppings: &[f64]) -> Result<Self> {
        if hoppings.is_empty() || hoppings.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "need 2L-1 hoppings, got {}",
                hoppings.len()
            )));
        }
        if hoppings.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite hopping".into()));
        }
        Ok(MajoranaCoupling {
            hoppings: hoppings.to_vec(),
        })
    }

    pub fn num_sites(&self) -> usize {
        self.hoppings.len().div_ceil(2)
    }

    pub fn hoppings(&self) -> &[f64] {
        &self.hoppings
    }

    /// Matrix size `2L`.
    pub fn size(&self) -> usize {
        self.hoppings.len() + 1
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        if k == j + 1 {
            -2.0 * self.hoppings[j]
        } else if j == k + 1 {
            2.0 * self.hoppings[k]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.size();
        Mat::from_fn(n, n, |j, k| self.entry(j, k))
    }

    /// Real symmetric tridiagonal form of `iA` under `u_j -> i^j u_j`.
    fn chiral_form(&self) -> Mat<f64> {
        let n = self.size();
        Mat::from_fn(n, n, |j, k| {
            if k == j + 1 {
                2.0 * self.hoppings[j]
            } else if j == k + 1 {
                2.0 * self.hoppings[k]
            } else {
                0.0
            }
        })
    }
}

/// Non-negative single-particle energies `eps_k` (ascending); the many-body
/// spectrum is `sum_k (+/- eps_k / 2)`.
pub fn single_particle_energies(coupling: &MajoranaCoupling) -> Result<Vec<f64>> {
    let mut vals = linalg::symmetric_eigenvalues(&coupling.chiral_form())?;
    vals.sort_by(f64::total_cmp);
    let l = coupling.num_sites();
    Ok(vals[l..].iter().map(|e| e.abs()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    matrix: Mat<f64>,
}

impl CovarianceMatrix {
    pub fn from_matrix(matrix: Mat<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || !n.is_multiple_of(2) || matrix.ncols() != n {
            return Err(Error::InvalidInput(format!("covariance must be 2L x 2L, got {n}")));
        }
        for j in 0..n {
            for k in 0..=j {
                if (matrix[(j, k)] + matrix[(k, j)]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "covariance not antisymmetric at ({j},{k})"
                    )));
                }
            }
        }
        Ok(CovarianceMatrix { matrix })
    }

    pub fn num_sites(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.matrix[(j, k)]
    }

    /// Covariance of the `count` sites starting at `first`. Its lattice is
    /// the corresponding triangle of the full lattice.
    pub fn restrict_sites(&self, first: usize, count: usize) -> Result<Self> {
        let l = self.num_sites();
        if count == 0 || first + count > l {
            return Err(Error::InvalidInput(format!(
                "sites {first}..{} outside chain of {l}",
                first + count
            )));
        }
        let o = 2 * first;
        Ok(CovarianceMatrix {
            matrix: Mat::from_fn(2 * count, 2 * count, |j, k| self.matrix[(o + j, o + k)]),
        })
    }

    /// `max |M M^T - 1|`.
    pub fn purity_error(&self) -> f64 {
        let prod = &self.matrix * self.matrix.transpose();
        let n = prod.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let id = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((prod[(j, k)] - id).abs());
            }
        }
        worst
    }

    pub fn is_pure(&self) -> bool {
        self.purity_error() < PURITY_TOL
    }

    /// Strictly-upper triangle as `j,k,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,k,value")?;
        let n = self.matrix.nrows();
        for j in 0..n {
            for k in j + 1..n {
                writeln!(w, "{j},{k},{}", fmt_f64(self.matrix[(j, k)]))?;
            }
        }
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = data_lines(text);
        if lines.next().map(|(_, h)| h) != Some("j,k,value") {
            return Err(Error::Parse("expected header `j,k,value`".into()));
        }
        let mut entries = Vec::new();
        for (lineno, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("line {lineno}: malformed covariance row"));
            if f.len() != 3 {
                return Err(bad());
            }
            let j: usize = f[0].trim().parse().map_err(|_| bad())?;
            let k: usize = f[1].trim().parse().map_err(|_| bad())?;
            let v: f64 = f[2].trim().parse().map_err(|_| bad())?;
            if k <= j {
                return Err(bad());
            }
            entries.push((j, k, v));
        }
        let n = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        let mut m = Mat::<f64>::zeros(n, n);
        for (j, k, v) in entries {
            m[(j, k)] = v;
            m[(k, j)] = -v;
        }
        Self::from_matrix(m)
    }
}

#[derive(Clone, Debug)]
pub struct GroundCovariance {
    pub covariance: CovarianceMatrix,
    /// Non-negative single-particle energies, ascending.
    pub energies: Vec<f64>,
    /// Number of modes with energy below `ZERO_MODE_TOL`.
    pub near_zero_modes: usize,
}

impl GroundCovariance {
    /// Two or more zero modes leave the pairing inside the zero-energy
    /// subspace (and with it the subsystem entropies) ambiguous. A single
    /// pair is fixed up to orientation; flipping it only moves entropies of
    /// windows that split the two zero modes, by their weight at the cut.
    pub fn is_ambiguous(&self) -> bool {
        self.near_zero_modes >= 2
    }

    pub fn ground_energy(&self) -> f64 {
        -0.5 * self.energies.iter().sum::<f64>()
    }
}

/// Ground-state covariance of the quadratic Hamiltonian.
pub fn ground_covariance(coupling: &MajoranaCoupling) -> Result<GroundCovariance> {
    let n = coupling.size();
    let l = coupling.num_sites();
    let (vals, vecs) = linalg::symmetric_eigen(&coupling.chiral_form())?;
    let zero_count = (l..n).filter(|&i| vals[i] < ZERO_MODE_TOL).count();

    let phase_re = |j: usize| [1.0, 0.0, -1.0, 0.0][j % 4];
    let phase_im = |j: usize| [0.0, 1.0, 0.0, -1.0][j % 4];
    let split = |i: usize| -> (Vec<f64>, Vec<f64>) {
        let a = (0..n).map(|j| vecs[(j, i)] * phase_re(j)).collect();
        let b = (0..n).map(|j| vecs[(j, i)] * phase_im(j)).collect();
        (a, b)
    };

    let scale = vals[n - 1].abs().max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(l);
    let mut start = l;
    for end in l + 1..=n {
        if end < n && vals[end] - vals[end - 1] <= CLUSTER_GAP * scale {
            continue;
        }
        let k = end - start;
        // a cluster touching zero overlaps its mirror and takes both signs
        let members = if start == l && 2.0 * vals[l].abs() <= CLUSTER_GAP * scale {
            l - k..end
        } else {
            start..end
        };
        if k == 1 && members.len() == 1 {
            let (mut a, mut b) = split(start);
            normalize(&mut a)?;
            normalize(&mut b)?;
            pairs.push((a, b));
        } else {
            pairs.extend(cluster_pairs(coupling, members.map(split), k)?);
        }
        start = end;
    }
    let mut m = Mat::<f64>::zeros(n, n);
    for (a, b) in &pairs {
        // orient each pair so its energy contribution a^T A b / 2 is <= 0
        let s = bilinear(coupling, a, b);
        let (a, b) = if s > 0.0 { (b, a) } else { (a, b) };
        for j in 0..n {
            if a[j] == 0.0 && b[j] == 0.0 {
                continue;
            }
            for k in 0..n {
                m[(j, k)] += a[j] * b[k] - b[j] * a[k];
            }
        }
    }
    let covariance = CovarianceMatrix { matrix: m };
    let err = covariance.purity_error();
    if err > PURITY_TOL {
        return Err(Error::Numerical(format!(
            "ground covariance not pure: |MM^T - 1| = {err:e}"
        )));
    }
    let mut energies: Vec<f64> = vals[l..].iter().map(|e| e.abs()).collect();
    energies.sort_by(f64::total_cmp);
    Ok(GroundCovariance {
        covariance,
        energies,
        near_zero_modes: zero_count,
    })
}

/// Pairs spanning a cluster of (nearly) degenerate modes: orthonormal bases
/// of its even and odd parts, matched through the SVD of `A` between them.
fn cluster_pairs(
    coupling: &MajoranaCoupling,
    parts: impl Iterator<Item = (Vec<f64>, Vec<f64>)>,
    k: usize,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let (evens, odds): (Vec<_>, Vec<_>) = parts.unzip();
    let evens = orthonormal_basis(evens, k)?;
    let odds = orthonormal_basis(odds, k)?;
    if k == 1 {
        return Ok(vec![(evens[0].clone(), odds[0].clone())]);
    }
    let c = Mat::from_fn(k, k, |p, q| bilinear(coupling, &evens[p], &odds[q]));
    let svd = c
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("mode-cluster svd: {e:?}")))?;
    let (u, v) = (svd.U(), svd.V());
    let combine = |basis: &[Vec<f64>], coeffs: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let n = basis[0].len();
        (0..n).map(|j| (0..k).map(|p| coeffs(p) * basis[p][j]).sum()).collect()
    };
    Ok((0..k)
        .map(|r| (combine(&evens, &|p| u[(p, r)]), combine(&odds, &|q| v[(q, r)])))
        .collect())
}

fn orthonormal_basis(vectors: Vec<Vec<f64>>, rank: usize) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rank);
    // largest vectors first so that noise-sized parts are rejected
    let mut vectors = vectors;
    vectors.sort_by(|x, y| dot(y, y).total_cmp(&dot(x, x)));
    for mut v in vectors {
        for b in &basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        if dot(&v, &v).sqrt() > 1e-6 && basis.len() < rank {
            normalize(&mut v)?;
            basis.push(v);
        }
    }
    if basis.len() != rank {
        return Err(Error::Numerical(format!(
            "mode cluster has rank {} on one sublattice, expected {rank}",
            basis.len()
        )));
    }
    Ok(basis)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let norm = dot(v, v).sqrt();
    if norm < 1e-12 {
        return Err(Error::Numerical("degenerate mode vector".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// `a^T A b` using the band structure of `A`.
fn bilinear(coupling: &MajoranaCoupling, a: &[f64], b: &[f64]) -> f64 {
    (0..coupling.hoppings.len())
        .map(|j| -2.0 * coupling.hoppings[j] * (a[j] * b[j + 1] - a[j + 1] * b[j]))
        .sum()
}

/// Entropy in bits of the Majorana modes `indices`.
pub fn majorana_set_entropy(cov: &CovarianceMatrix, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let k = indices.len();
    let block = Mat::from_fn(k, k, |p, q| cov.matrix[(indices[p], indices[q])]);
    let gram = &block * block.transpose();
    let mut s = 0.0;
    for mu in linalg::symmetric_eigenvalues(&gram)? {
        let nu = mu.max(0.0).sqrt();
        if nu > 1.0 + NU_TOL {
            return Err(Error::InvalidCovariance(nu));
        }
        s += linalg::binary_entropy((1.0 + nu.min(1.0)) / 2.0);
    }
    // each nu appears twice in the spectrum of M_A M_A^T
    Ok(s / 2.0)
}

/// Entropy of a Majorana subset of a pure state from the block `X` coupling
/// it to the rest. The eigenvalues of the smaller of `X X^T` and `X^T X` are
/// `1 - nu^2`, so mode occupations close to 0 or 1 keep their precision,
/// which the `nu` route loses to cancellation in `1 - nu`.
pub fn pure_set_entropy(cov: &CovarianceMatrix, indices: &[usize]) -> Result<f64> {
    let n = cov.matrix.nrows();
    let mut inside = vec![false; n];
    indices.iter().for_each(|&j| inside[j] = true);
    let outside: Vec<usize> = (0..n).filter(|&j| !inside[j]).collect();
    if indices.is_empty() || outside.is_empty() {
        return Ok(0.0);
    }
    let block = Mat::from_fn(indices.len(), outside.len(), |p, q| {
        cov.matrix[(indices[p], outside[q])]
    });
    let gram = if block.nrows() <= block.ncols() {
        &block * block.transpose()
    } else {
        block.transpose() * &block
    };
    let mut s = 0.0;
    for mu in linalg::symmetric_eigenvalues(&gram)? {
        if mu > 1.0 + NU_TOL {
            return Err(Error::InvalidCovariance(mu.sqrt()));
        }
        let mu = mu.clamp(0.0, 1.0);
        // p = (1 - nu) / 2 with nu = sqrt(1 - mu), rearranged to avoid cancellation
        let p = mu / (2.0 * (1.0 + (1.0 - mu).sqrt()));
        s += linalg::mode_entropy(p);
    }
    Ok(s / 2.0)
}

/// Entropy of sites `m..=m + ell`: Majorana indices `2m ..= 2(m + ell) + 1`.
pub fn gaussian_subsystem_entropy(cov: &CovarianceMatrix, ell: usize, m: usize) -> Result<f64> {
    let l = cov.num_sites();
    if m + ell >= l {
        return Err(Error::SubsystemOutOfRange { ell, m, sites: l });
    }
    let indices: Vec<usize> = (2 * m..2 * (m + ell + 1)).collect();
    majorana_set_entropy(cov, &indices)
}

/// Provider over a Gaussian state. Pure states go through the block that
/// couples each window to its complement.
pub struct GaussianEntropyProvider<'a> {
    cov: &'a CovarianceMatrix,
    pure: bool,
    cache: HashMap<(usize, usize), f64>,
}

pub fn gaussian_entropy_provider(cov: &CovarianceMatrix) -> GaussianEntropyProvider<'_> {
    GaussianEntropyProvider {
        cov,
        pure: cov.is_pure(),
        cache: HashMap::new(),
    }
}

impl EntropyProvider for GaussianEntropyProvider<'_> {
    fn num_sites(&self) -> usize {
        self.cov.num_sites()
    }

    fn subsystem_entropy(&mut self, ell: usize, m: usize) -> Result<f64> {
        let l = self.cov.num_sites();
        if m + ell >= l {
            return Err(Error::SubsystemOutOfRange { ell, m, sites: l });
        }
        if let Some(&s) = self.cache.get(&(ell, m)) {
            return Ok(s);
        }
        let window: Vec<usize> = (2 * m..2 * (m + ell + 1)).collect();
        let s = if self.pure {
            pure_set_entropy(self.cov, &window)?
        } else {
            majorana_set_entropy(self.cov, &window)?
        };
        self.cache.insert((ell, m), s);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{info_per_scale, local_information};
    use crate::lengths::{expected_edge_correlation_length, large_scale_information};
    use approx::assert_abs_diff_eq;

    fn dimerized(sites: usize) -> Vec<f64> {
        (0..2 * sites - 1).map(|j| if j % 2 == 0 { 0.0 } else { 1.0 }).collect()
    }

    #[test]
    fn single_site_pair() {
        let g = ground_covariance(&MajoranaCoupling::from_hoppings(&[1.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(g.covariance.get(0, 1), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.ground_energy(), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            gaussian_subsystem_entropy(&g.covariance, 0, 0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dimerized_chain_has_one_edge_bit() {
        let coupling = MajoranaCoupling::from_hoppings(&dimerized(8)).unwrap();
        let g = ground_covariance(&coupling).unwrap();
        assert_eq!(g.near_zero_modes, 1);
        assert!(!g.is_ambiguous());
        let mut p = gaussian_entropy_provider(&g.covariance);
        for m in 0..8 {
            assert_abs_diff_eq!(p.subsystem_entropy(0, m).unwrap(), 1.0, epsilon = 1e-12);
        }
        let profile = info_per_scale(&local_information(&mut p).unwrap());
        assert_abs_diff_eq!(large_scale_information(&profile), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(expected_edge_correlation_length(&profile).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn trivial_block_limits() {
        // pure block: any pure state restricted to the whole chain
        let g = ground_covariance(&MajoranaCoupling::from_hoppings(&[0.3, 0.7, 1.1]).unwrap()).unwrap();
        assert!(gaussian_subsystem_entropy(&g.covariance, 1, 0).unwrap() < 1e-10);
        // maximally mixed block: zero covariance
        let zero = CovarianceMatrix::from_matrix(Mat::zeros(6, 6)).unwrap();
        assert_abs_diff_eq!(gaussian_subsystem_entropy(&zero, 2, 0).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_route_matches_block_spectrum() {
        let t = [0.3, 0.9, 0.5, 0.2, 0.8, 0.4, 0.7, 1.1, 0.6];
        let g = ground_covariance(&MajoranaCoupling::from_hoppings(&t).unwrap()).unwrap();
        for (lo, hi) in [(0, 2), (2, 6), (0, 9), (4, 10), (1, 5)] {
            let idx: Vec<usize> = (lo..hi).collect();
            let a = pure_set_entropy(&g.covariance, &idx).unwrap();
            let b = majorana_set_entropy(&g.covariance, &idx).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn pure_route_resolves_tiny_occupations() {
        // two sites joined by a weak coupling w: the even sector is a two-level
        // problem with splitting 4 and mixing w, so the site occupation is sin^2(theta)
        let w = 1e-8;
        let g = ground_covariance(&MajoranaCoupling::from_hoppings(&[1.0, w, 1.0]).unwrap()).unwrap();
        let s = pure_set_entropy(&g.covariance, &[0, 1]).unwrap();
        let theta = (w / 2.0f64).atan() / 2.0;
        let expected = linalg::mode_entropy(theta.sin().powi(2));
        assert_abs_diff_eq!(s / expected, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn invalid_covariance_is_rejected() {
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 1)] = 1.5;
        m[(1, 0)] = -1.5;
        let cov = CovarianceMatrix::from_matrix(m).unwrap();
        assert!(matches!(
            gaussian_subsystem_entropy(&cov, 0, 0),
            Err(Error::InvalidCovariance(_))
        ));
    }

    #[test]
    fn mirrored_couplings_mirror_entropies() {
        let t = [0.3, 0.9, 0.5, 0.2, 0.8, 0.4, 0.7];
        let rev: Vec<f64> = t.iter().rev().copied().collect();
        let a = ground_covariance(&MajoranaCoupling::from_hoppings(&t).unwrap()).unwrap();
        let b = ground_covariance(&MajoranaCoupling::from_hoppings(&rev).unwrap()).unwrap();
        let mut pa = gaussian_entropy_provider(&a.covariance);
        let mut pb = gaussian_entropy_provider(&b.covariance);
        for ell in 0..4 {
            for m in 0..4 - ell {
                let sa = pa.subsystem_entropy(ell, m).unwrap();
                let sb = pb.subsystem_entropy(ell, 3 - ell - m).unwrap();
                assert_abs_diff_eq!(sa, sb, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn energy_is_minimal_among_mode_fillings() {
        let coupling = MajoranaCoupling::from_hoppings(&[0.4, 1.0, 0.6, 0.3, 0.9]).unwrap();
        let g = ground_covariance(&coupling).unwrap();
        let a = coupling.to_dense();
        // E = -(1/4) tr(A M)
        let am = &a * g.covariance.matrix();
        let e = -(0..6).map(|i| am[(i, i)]).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(e, g.ground_energy(), epsilon = 1e-12);
    }

    #[test]
    fn near_degenerate_modes_stay_pure() {
        // weak on-site links leave modes at ~1e-11 next to an exact zero mode
        for weak in [1e-9, 1e-11, 1e-13] {
            let mut t: Vec<f64> = (0..39)
                .map(|j| if j % 2 == 0 { 0.2 } else { 1.0 + 0.01 * j as f64 })
                .collect();
            t[10] = weak;
            t[24] = 2.0 * weak;
            t[38] = 0.0;
            let g = ground_covariance(&MajoranaCoupling::from_hoppings(&t).unwrap()).unwrap();
            assert!(
                g.covariance.purity_error() < 1e-12,
                "{weak}: {}",
                g.covariance.purity_error()
            );
            let lattice = local_information(&mut gaussian_entropy_provider(&g.covariance)).unwrap();
            assert!(lattice.iter().all(|(_, v)| v >= -1e-12));
        }
    }

    #[test]
    fn restriction_reproduces_triangle() {
        let t: Vec<f64> = (0..15).map(|j| 0.3 + 0.05 * j as f64).collect();
        let g = ground_covariance(&MajoranaCoupling::from_hoppings(&t).unwrap()).unwrap();
        let full = local_information(&mut gaussian_entropy_provider(&g.covariance)).unwrap();
        let sub = g.covariance.restrict_sites(2, 4).unwrap();
        assert!(!sub.is_pure());
        let part = local_information(&mut gaussian_entropy_provider(&sub)).unwrap();
        for (id, v) in part.iter() {
            assert_abs_diff_eq!(v, full.get(id.ell, id.m + 2), epsilon = 1e-10);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = ground_covariance(&MajoranaCoupling::from_hoppings(&[0.4, 1.0, 0.6]).unwrap()).unwrap();
        let mut buf = Vec::new();
        g.covariance.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6);
        let back = CovarianceMatrix::from_csv_str(&text).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                assert_abs_diff_eq!(back.get(j, k), g.covariance.get(j, k), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn provider_rejects_out_of_range() {
        let g = ground_covariance(&MajoranaCoupling::from_hoppings(&[1.0, 1.0, 1.0]).unwrap()).unwrap();
        let mut p = gaussian_entropy_provider(&g.covariance);
        assert!(p.subsystem_entropy(1, 1).is_err());
    }
}
