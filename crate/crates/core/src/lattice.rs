//! The information lattice: local information `i(ell, m)` of every contiguous
//! subsystem, and its per-scale totals.
//!
//! Subsystems are indexed by scale `ell` (extent minus one) and left edge `m`,
//! so `(ell, m)` covers sites `m..=m + ell`. The centre label used in output
//! files is `two_n = 2m + ell`, which is twice the (possibly half-integer)
//! centre site.
//!
//! Local information is assembled from von Neumann entropies:
//!
//! ```text
//! i(0, m)   = log2 d - S(0, m)
//! i(1, m)   = S(0, m) + S(0, m+1) - S(1, m)
//! i(ell, m) = S(ell-1, m) + S(ell-1, m+1) - S(ell, m) - S(ell-2, m+1)
//! ```
//!
//! which is non-negative for any valid state by (strong) subadditivity.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{data_lines, fmt_f64, Provenance};

/// Numerical slack on strong subadditivity.
pub const SSA_TOL: f64 = 1e-10;

pub const LATTICE_CSV_HEADER: &str = "ell,two_n,i_bits";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsystemId {
    pub ell: usize,
    pub m: usize,
}

impl SubsystemId {
    pub fn new(ell: usize, m: usize, sites: usize) -> Result<Self> {
        if m + ell >= sites {
            return Err(Error::SubsystemOutOfRange { ell, m, sites });
        }
        Ok(SubsystemId { ell, m })
    }

    pub fn from_two_n(ell: usize, two_n: usize, sites: usize) -> Result<Self> {
        if two_n < ell || !(two_n - ell).is_multiple_of(2) {
            return Err(Error::Parse(format!("two_n={two_n} inconsistent with ell={ell}")));
        }
        Self::new(ell, (two_n - ell) / 2, sites)
    }

    /// Twice the centre position, `2m + ell`.
    pub fn two_n(&self) -> usize {
        2 * self.m + self.ell
    }

    pub fn last_site(&self) -> usize {
        self.m + self.ell
    }

    pub fn contains(&self, other: &SubsystemId) -> bool {
        other.m >= self.m && other.last_site() <= self.last_site()
    }

    /// Every subsystem contained in this one, including itself.
    pub fn descendants(&self) -> impl Iterator<Item = SubsystemId> + '_ {
        (0..=self.ell).flat_map(move |ell| (self.m..=self.last_site() - ell).map(move |m| SubsystemId { ell, m }))
    }
}

/// A source of von Neumann entropies (in bits) of contiguous subsystems.
///
/// Implementations may keep internal caches, hence `&mut self`; a provider
/// is therefore used serially by the lattice builder.
pub trait EntropyProvider {
    fn num_sites(&self) -> usize;

    fn local_dim(&self) -> usize {
        2
    }

    /// Entropy of sites `m..=m + ell`.
    fn subsystem_entropy(&mut self, ell: usize, m: usize) -> Result<f64>;
}

impl<P: EntropyProvider + ?Sized> EntropyProvider for &mut P {
    fn num_sites(&self) -> usize {
        (**self).num_sites()
    }

    fn local_dim(&self) -> usize {
        (**self).local_dim()
    }

    fn subsystem_entropy(&mut self, ell: usize, m: usize) -> Result<f64> {
        (**self).subsystem_entropy(ell, m)
    }
}

/// Entropies of all subsystems up to some maximal scale, `rows[ell][m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyTable {
    sites: usize,
    rows: Vec<Vec<f64>>,
}

impl EntropyTable {
    /// Queries the provider in order of increasing `ell`, then `m`.
    pub fn compute<P: EntropyProvider + ?Sized>(provider: &mut P, max_ell: usize) -> Result<Self> {
        let sites = provider.num_sites();
        let max_ell = max_ell.min(sites.saturating_sub(1));
        let mut rows = Vec::with_capacity(max_ell + 1);
        for ell in 0..=max_ell {
            let row = (0..sites - ell)
                .map(|m| provider.subsystem_entropy(ell, m))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(EntropyTable { sites, rows })
    }

    pub fn get(&self, ell: usize, m: usize) -> f64 {
        self.rows[ell][m]
    }

    pub fn max_scale(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }
}

/// Local information values `rows[ell][m]` in bits.
///
/// A lattice may be truncated at a maximal scale below `L - 1`, in which
/// case the sum rule does not apply.
#[derive(Clone, Debug, PartialEq)]
pub struct InformationLattice {
    sites: usize,
    local_dim: usize,
    rows: Vec<Vec<f64>>,
}

impl InformationLattice {
    /// Builds a lattice from explicit rows, checking the triangular shape.
    pub fn from_rows(sites: usize, local_dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if sites == 0 || rows.is_empty() || rows.len() > sites {
            return Err(Error::InvalidInput(format!(
                "lattice with {} rows for {sites} sites",
                rows.len()
            )));
        }
        for (ell, row) in rows.iter().enumerate() {
            if row.len() != sites - ell {
                return Err(Error::InvalidInput(format!(
                    "row ell={ell} has {} entries, expected {}",
                    row.len(),
                    sites - ell
                )));
            }
        }
        Ok(InformationLattice { sites, local_dim, rows })
    }

    /// Applies the local-information formula to a table of entropies.
    pub fn from_entropies(table: &EntropyTable, local_dim: usize) -> Result<Self> {
        let sites = table.num_sites();
        let log_d = (local_dim as f64).log2();
        let mut rows = Vec::with_capacity(table.max_scale() + 1);
        for ell in 0..=table.max_scale() {
            let mut row = Vec::with_capacity(sites - ell);
            for m in 0..sites - ell {
                let raw = match ell {
                    0 => log_d - table.get(0, m),
                    1 => table.get(0, m) + table.get(0, m + 1) - table.get(1, m),
                    _ => {
                        table.get(ell - 1, m) + table.get(ell - 1, m + 1)
                            - table.get(ell, m)
                            - table.get(ell - 2, m + 1)
                    }
                };
                row.push(clamp_ssa(raw, ell, m)?);
            }
            rows.push(row);
        }
        Ok(InformationLattice { sites, local_dim, rows })
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn max_scale(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.sites
    }

    pub fn get(&self, ell: usize, m: usize) -> f64 {
        self.rows[ell][m]
    }

    pub fn value(&self, id: SubsystemId) -> Option<f64> {
        self.rows.get(id.ell).and_then(|r| r.get(id.m)).copied()
    }

    pub fn row(&self, ell: usize) -> &[f64] {
        &self.rows[ell]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Entries in `(ell, two_n)` order.
    pub fn iter(&self) -> impl Iterator<Item = (SubsystemId, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(ell, row)| row.iter().enumerate().map(move |(m, &v)| (SubsystemId { ell, m }, v)))
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().flatten().sum()
    }

    /// Sum of local information over every subsystem contained in `id`.
    pub fn contained_sum(&self, id: SubsystemId) -> f64 {
        id.descendants().filter_map(|s| self.value(s)).sum()
    }

    /// Mirror image of the lattice (site `k` becomes `L - 1 - k`).
    pub fn mirrored(&self) -> Self {
        let rows = self.rows.iter().map(|r| r.iter().rev().copied().collect()).collect();
        InformationLattice {
            sites: self.sites,
            local_dim: self.local_dim,
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W, provenance: Option<&Provenance>) -> Result<()> {
        if let Some(p) = provenance {
            writeln!(w, "{}", p.comment_line())?;
        }
        writeln!(w, "{LATTICE_CSV_HEADER}")?;
        for (id, v) in self.iter() {
            writeln!(w, "{},{},{}", id.ell, id.two_n(), fmt_f64(v))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, provenance: Option<&Provenance>) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, provenance).expect("write to Vec");
        String::from_utf8(buf).expect("utf8")
    }

    /// Parses a lattice CSV. The site count is inferred from the `ell = 0`
    /// row; the local dimension must be supplied.
    pub fn from_csv_str(text: &str, local_dim: usize) -> Result<Self> {
        let mut lines = data_lines(text);
        match lines.next() {
            Some((_, h)) if h == LATTICE_CSV_HEADER => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header `{LATTICE_CSV_HEADER}`, found {:?}",
                    other.map(|(_, l)| l)
                )))
            }
        }
        let mut entries = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {lineno}: expected 3 fields")));
            }
            let parse_err = |what: &str| Error::Parse(format!("line {lineno}: bad {what}"));
            let ell: usize = fields[0].trim().parse().map_err(|_| parse_err("ell"))?;
            let two_n: usize = fields[1].trim().parse().map_err(|_| parse_err("two_n"))?;
            let v: f64 = fields[2].trim().parse().map_err(|_| parse_err("i_bits"))?;
            entries.push((ell, two_n, v));
        }
        let sites = entries.iter().filter(|e| e.0 == 0).count();
        if sites == 0 {
            return Err(Error::Parse("no ell=0 rows".into()));
        }
        let max_ell = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let mut rows: Vec<Vec<Option<f64>>> = (0..=max_ell.min(sites - 1))
            .map(|ell| vec![None; sites - ell])
            .collect();
        for (ell, two_n, v) in entries {
            let id = SubsystemId::from_two_n(ell, two_n, sites)?;
            let slot = &mut rows[id.ell][id.m];
            if slot.is_some() {
                return Err(Error::Parse(format!("duplicate entry ell={ell} two_n={two_n}")));
            }
            *slot = Some(v);
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(ell, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(m, v)| v.ok_or_else(|| Error::Parse(format!("missing entry ell={ell} m={m}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(sites, local_dim, rows)
    }
}

fn clamp_ssa(value: f64, ell: usize, m: usize) -> Result<f64> {
    if value < -SSA_TOL || !value.is_finite() {
        Err(Error::SsaViolation { ell, m, value })
    } else {
        Ok(value.max(0.0))
    }
}

/// Computes the full information lattice from a provider.
pub fn local_information<P: EntropyProvider + ?Sized>(provider: &mut P) -> Result<InformationLattice> {
    let sites = provider.num_sites();
    local_information_up_to(provider, sites.saturating_sub(1))
}

/// Computes the lattice for scales `0..=max_ell` only.
pub fn local_information_up_to<P: EntropyProvider + ?Sized>(
    provider: &mut P,
    max_ell: usize,
) -> Result<InformationLattice> {
    let sites = provider.num_sites();
    if sites < 2 {
        return Err(Error::InvalidInput(format!(
            "information lattice needs at least 2 sites, got {sites}"
        )));
    }
    let table = EntropyTable::compute(provider, max_ell)?;
    InformationLattice::from_entropies(&table, provider.local_dim())
}

/// Information per scale, `I(ell) = sum_m i(ell, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleProfile {
    pub sites: usize,
    pub totals: Vec<f64>,
}

impl ScaleProfile {
    pub fn new(sites: usize, totals: Vec<f64>) -> Result<Self> {
        if totals.len() > sites || totals.is_empty() {
            return Err(Error::InvalidInput(format!(
                "profile of length {} for {sites} sites",
                totals.len()
            )));
        }
        Ok(ScaleProfile { sites, totals })
    }

    /// `I(ell)`, or zero for scales beyond the stored range.
    pub fn at(&self, ell: usize) -> f64 {
        self.totals.get(ell).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.totals.iter().sum()
    }

    pub fn is_complete(&self) -> bool {
        self.totals.len() == self.sites
    }
}

pub fn info_per_scale(lattice: &InformationLattice) -> ScaleProfile {
    ScaleProfile {
        sites: lattice.num_sites(),
        totals: lattice.rows().iter().map(|r| r.iter().sum()).collect(),
    }
}

/// `|I(rho_id) - sum of i over subsystems contained in id|`, in bits.
pub fn subsystem_decomposition_check<P: EntropyProvider + ?Sized>(
    lattice: &InformationLattice,
    provider: &mut P,
    id: SubsystemId,
) -> Result<f64> {
    SubsystemId::new(id.ell, id.m, lattice.num_sites())?;
    if id.ell > lattice.max_scale() {
        return Err(Error::InvalidInput(format!(
            "lattice truncated at ell={} cannot check ell={}",
            lattice.max_scale(),
            id.ell
        )));
    }
    let log_d = (lattice.local_dim() as f64).log2();
    let info = (id.ell + 1) as f64 * log_d - provider.subsystem_entropy(id.ell, id.m)?;
    Ok((info - lattice.contained_sum(id)).abs())
}
