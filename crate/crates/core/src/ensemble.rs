//! Disorder sweeps over `(L, delta)` grids of the Kitaev chain.
//!
//! Each task `(L, delta index, realization)` is independent: its seed is
//! `splitmix64(base_seed ^ splitmix64(L << 32 | delta index)) + realization`,
//! so records depend only on the config. Workers pull tasks from a shared
//! counter and a single writer emits records in task order.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use crate::dense::{dense_entropy_provider, DenseState, MAX_DENSE_SITES};
use crate::error::{Error, Result};
use crate::gaussian::{gaussian_entropy_provider, ground_covariance};
use crate::io::{config_hash, fmt_f64, Provenance};
use crate::kitaev::{build_hamiltonian, sample_disorder, KitaevRealization, Parity, Target};
use crate::lattice::{info_per_scale, local_information, InformationLattice};
use crate::lengths::{LengthSummary, SummaryRecord};

pub const AGGREGATE_CSV_HEADER: &str = "L,delta,g,stat,metric,value";
pub const METRICS: [&str; 4] = ["xi", "lambda", "gamma", "tau"];
const INTERVAL_FRACTION: f64 = 0.75;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Auto,
    Dense,
    Gaussian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateChoice {
    #[default]
    Ground,
    MidspectrumEven,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Gaussian,
}

/// Concrete backend for a request, or an input error for invalid pairings.
pub fn resolve_backend(choice: BackendChoice, state: StateChoice, g: f64, sites: usize) -> Result<Backend> {
    let backend = match choice {
        BackendChoice::Auto if g == 0.0 && state == StateChoice::Ground => Backend::Gaussian,
        BackendChoice::Auto | BackendChoice::Dense => Backend::Dense,
        BackendChoice::Gaussian => Backend::Gaussian,
    };
    if backend == Backend::Gaussian && g != 0.0 {
        return Err(Error::InvalidInput("the gaussian backend requires g = 0".into()));
    }
    if backend == Backend::Gaussian && state == StateChoice::MidspectrumEven {
        return Err(Error::InvalidInput(
            "midspectrum states require the dense backend".into(),
        ));
    }
    if backend == Backend::Dense && sites > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            sites,
            limit: MAX_DENSE_SITES,
        });
    }
    Ok(backend)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    pub g: f64,
    #[serde(rename = "delta")]
    pub deltas: Vec<f64>,
    pub realizations: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default)]
    pub state: StateChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub keep_profile: bool,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: SweepConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidInput("realizations must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.deltas.is_empty() {
            return Err(Error::InvalidInput("L and delta grids must be non-empty".into()));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) || !self.g.is_finite() {
            return Err(Error::InvalidInput("delta grid and g must be finite".into()));
        }
        for &l in &self.sizes {
            if l < 2 {
                return Err(Error::InvalidInput(format!("L = {l} is below 2")));
            }
            resolve_backend(self.backend, self.state, self.g, l)?;
        }
        Ok(())
    }

    /// Hash of the fields that determine the records (worker count excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.jobs = None;
        config_hash(&c)
    }

    pub fn tasks(&self) -> Vec<TaskKey> {
        let mut out = Vec::new();
        for &sites in &self.sizes {
            for delta_index in 0..self.deltas.len() {
                for realization in 0..self.realizations {
                    out.push(TaskKey {
                        sites,
                        delta_index,
                        realization,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskKey {
    pub sites: usize,
    pub delta_index: usize,
    pub realization: usize,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_seed(base_seed: u64, sites: usize, delta_index: usize, realization: usize) -> u64 {
    let point = ((sites as u64) << 32) | delta_index as u64;
    splitmix64(base_seed ^ splitmix64(point)).wrapping_add(realization as u64)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    pub near_zero_modes: usize,
    pub zero_mode_ambiguous: bool,
    pub tie_break: bool,
}

impl RecordFlags {
    pub fn any(&self) -> bool {
        self.zero_mode_ambiguous || self.tie_break
    }
}

/// State, lattice and diagnostics for one realization.
#[derive(Clone, Debug)]
pub struct SolvedRealization {
    pub backend: Backend,
    pub lattice: InformationLattice,
    pub flags: RecordFlags,
    pub energy: f64,
    /// Present for the dense backend.
    pub state: Option<DenseState>,
}

pub fn solve_realization(r: &KitaevRealization, backend: Backend, state: StateChoice) -> Result<SolvedRealization> {
    match backend {
        Backend::Gaussian => {
            if state != StateChoice::Ground || r.g != 0.0 {
                return Err(Error::InvalidInput(
                    "the gaussian backend only handles g = 0 ground states".into(),
                ));
            }
            let gc = ground_covariance(&r.coupling()?)?;
            let lattice = local_information(&mut gaussian_entropy_provider(&gc.covariance))?;
            let flags = RecordFlags {
                near_zero_modes: gc.near_zero_modes,
                zero_mode_ambiguous: gc.is_ambiguous(),
                tie_break: false,
            };
            Ok(SolvedRealization {
                backend,
                lattice,
                flags,
                energy: gc.ground_energy(),
                state: None,
            })
        }
        Backend::Dense => {
            let h = build_hamiltonian(r)?;
            let pair = match state {
                StateChoice::Ground => h.ground_state()?,
                StateChoice::MidspectrumEven => h.sector_eigenpair(Parity::Even, Target::ClosestToZero)?,
            };
            let lattice = local_information(&mut dense_entropy_provider(&pair.state)?)?;
            let flags = RecordFlags {
                tie_break: pair.tie_flag,
                ..RecordFlags::default()
            };
            Ok(SolvedRealization {
                backend,
                lattice,
                flags,
                energy: pair.energy,
                state: Some(pair.state),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    #[serde(rename = "L")]
    pub sites: usize,
    pub delta: f64,
    pub delta_index: usize,
    pub g: f64,
    pub realization: usize,
    pub seed: u64,
    pub backend: Option<Backend>,
    pub state: StateChoice,
    pub config_hash: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub flags: RecordFlags,
    pub flagged: bool,
    pub energy: Option<f64>,
    pub summary: Option<SummaryRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<f64>>,
}

impl RealizationRecord {
    pub fn key(&self) -> TaskKey {
        TaskKey {
            sites: self.sites,
            delta_index: self.delta_index,
            realization: self.realization,
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        let s = self.summary.as_ref()?;
        match name {
            "xi" => s.xi,
            "lambda" => s.lambda,
            "gamma" => s.gamma,
            "tau" => s.tau,
            _ => None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Computes one task; failures become records with `ok = false`.
pub fn run_task(config: &SweepConfig, key: TaskKey, hash: &str) -> RealizationRecord {
    let delta = config.deltas[key.delta_index];
    let seed = derive_seed(config.base_seed, key.sites, key.delta_index, key.realization);
    let mut record = RealizationRecord {
        sites: key.sites,
        delta,
        delta_index: key.delta_index,
        g: config.g,
        realization: key.realization,
        seed,
        backend: None,
        state: config.state,
        config_hash: hash.to_string(),
        ok: false,
        error: None,
        flags: RecordFlags::default(),
        flagged: false,
        energy: None,
        summary: None,
        profile: None,
    };
    let outcome = resolve_backend(config.backend, config.state, config.g, key.sites).and_then(|backend| {
        record.backend = Some(backend);
        let r = sample_disorder(key.sites, delta, config.g, seed)?;
        solve_realization(&r, backend, config.state)
    });
    match outcome {
        Ok(solved) => {
            let profile = info_per_scale(&solved.lattice);
            record.ok = true;
            record.flagged = solved.flags.any();
            record.flags = solved.flags;
            record.energy = Some(solved.energy);
            record.summary = Some(LengthSummary::from_profile(&profile).to_record());
            if config.keep_profile {
                record.profile = Some(profile.totals.clone());
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub completed: usize,
    pub failed: usize,
    pub skipped: usize,
}

/// Runs every task not in `skip` on `jobs` workers, handing records to
/// `sink` in task order.
pub fn run_sweep<F>(config: &SweepConfig, jobs: usize, skip: &HashSet<TaskKey>, mut sink: F) -> Result<SweepReport>
where
    F: FnMut(&RealizationRecord) -> Result<()>,
{
    config.validate()?;
    let hash = config.hash();
    let all = config.tasks();
    let tasks: Vec<TaskKey> = all.iter().filter(|k| !skip.contains(k)).copied().collect();
    let mut report = SweepReport {
        skipped: all.len() - tasks.len(),
        ..SweepReport::default()
    };
    let next = AtomicUsize::new(0);
    let jobs = jobs.max(1).min(tasks.len().max(1));
    let (tx, rx) = mpsc::channel::<(usize, RealizationRecord)>();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..jobs {
            let tx = tx.clone();
            let (tasks, next, hash) = (&tasks, &next, &hash);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                if tx.send((i, run_task(config, tasks[i], hash))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emitted = 0;
        let mut sink_error = None;
        for (i, record) in rx {
            pending.insert(i, record);
            while let Some(record) = pending.remove(&emitted) {
                emitted += 1;
                if record.ok {
                    report.completed += 1;
                } else {
                    report.failed += 1;
                }
                if sink_error.is_none() {
                    if let Err(e) = sink(&record) {
                        sink_error = Some(e);
                        // stop handing out work
                        next.store(usize::MAX / 2, Ordering::Relaxed);
                    }
                }
            }
        }
        sink_error.map_or(Ok(()), Err)
    })?;
    Ok(report)
}

/// Records from JSON-lines text. A truncated final line is ignored so a
/// killed run can be resumed.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<RealizationRecord>> {
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let mut out = Vec::new();
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    for (i, line) in lines.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if Some(i) == last => break,
            Err(e) => return Err(Error::Parse(format!("record line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

pub fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

/// Narrowest window over sorted values holding `ceil(0.75 N)` of them;
/// the left-most one on ties.
pub fn narrowest_interval(sorted: &[f64]) -> Option<(f64, f64)> {
    if sorted.is_empty() {
        return None;
    }
    let w = ((INTERVAL_FRACTION * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let mut best = 0;
    for i in 1..=sorted.len() - w {
        if sorted[i + w - 1] - sorted[i] < sorted[best + w - 1] - sorted[best] {
            best = i;
        }
    }
    Some((sorted[best], sorted[best + w - 1]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricStats {
    pub median: f64,
    pub low: f64,
    pub high: f64,
    pub width: f64,
    pub count: usize,
}

impl MetricStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (low, high) = narrowest_interval(&v)?;
        Some(MetricStats {
            median: median(&v)?,
            low,
            high,
            width: high - low,
            count: v.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointStats {
    #[serde(rename = "L")]
    pub sites: usize,
    pub delta: f64,
    pub g: f64,
    pub records: usize,
    pub flagged: usize,
    pub failed: usize,
    /// Keyed by metric name; `None` when no usable values exist.
    pub metrics: BTreeMap<String, Option<MetricStats>>,
}

impl PointStats {
    pub fn metric(&self, name: &str) -> Option<&MetricStats> {
        self.metrics.get(name).and_then(|m| m.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateStats {
    pub points: Vec<PointStats>,
}

/// Per-point statistics over successful, unflagged records, in grid order.
pub fn aggregate(records: &[RealizationRecord]) -> AggregateStats {
    let mut groups: BTreeMap<(usize, usize), Vec<&RealizationRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.sites, r.delta_index)).or_default().push(r);
    }
    let points = groups
        .into_values()
        .map(|group| {
            let usable: Vec<&&RealizationRecord> = group.iter().filter(|r| r.ok && !r.flagged).collect();
            let metrics = METRICS
                .iter()
                .map(|&name| {
                    let values: Vec<f64> = usable.iter().filter_map(|r| r.metric(name)).collect();
                    (name.to_string(), MetricStats::from_values(&values))
                })
                .collect();
            PointStats {
                sites: group[0].sites,
                delta: group[0].delta,
                g: group[0].g,
                records: group.len(),
                flagged: group.iter().filter(|r| r.ok && r.flagged).count(),
                failed: group.iter().filter(|r| !r.ok).count(),
                metrics,
            }
        })
        .collect();
    AggregateStats { points }
}

impl AggregateStats {
    pub fn write_csv<W: Write>(&self, mut w: W, provenance: Option<&Provenance>) -> Result<()> {
        if let Some(p) = provenance {
            writeln!(w, "{}", p.comment_line())?;
        }
        writeln!(w, "{AGGREGATE_CSV_HEADER}")?;
        for p in &self.points {
            let prefix = format!("{},{},{}", p.sites, fmt_f64(p.delta), fmt_f64(p.g));
            writeln!(w, "{prefix},records,all,{}", p.records)?;
            writeln!(w, "{prefix},flagged,all,{}", p.flagged)?;
            writeln!(w, "{prefix},failed,all,{}", p.failed)?;
            for (name, stats) in &p.metrics {
                match stats {
                    Some(s) => {
                        writeln!(w, "{prefix},median,{name},{}", fmt_f64(s.median))?;
                        writeln!(w, "{prefix},low,{name},{}", fmt_f64(s.low))?;
                        writeln!(w, "{prefix},high,{name},{}", fmt_f64(s.high))?;
                        writeln!(w, "{prefix},width,{name},{}", fmt_f64(s.width))?;
                        writeln!(w, "{prefix},count,{name},{}", s.count)?;
                    }
                    None => writeln!(w, "{prefix},median,{name},null")?,
                }
            }
        }
        Ok(())
    }
}
