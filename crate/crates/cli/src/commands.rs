use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use infolattice::dense::{dense_entropy_provider, haar_random_state, DenseState};
use infolattice::ensemble::{
    aggregate, read_records, resolve_backend, run_sweep, solve_realization, Backend, BackendChoice, RecordFlags,
    StateChoice, SweepConfig, TaskKey,
};
use infolattice::gaussian::ground_covariance;
use infolattice::io::{config_hash, Provenance};
use infolattice::kitaev::{sample_disorder, KitaevRealization};
use infolattice::lengths::{LengthSummary, SummaryRecord};
use infolattice::mps::{mps_entropy_provider, mps_from_dense, MatrixProductState};
use infolattice::{info_per_scale, local_information, Error, InformationLattice};
use serde::{Deserialize, Serialize};

use crate::{
    BackendArg, EnsembleArgs, InputFormat, KitaevArgs, KitaevState, LatticeArgs, MakeStateArgs, StateFormat, StateKind,
};

const SUM_RULE_TOL: f64 = 1e-8;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Partial(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numerical(m) | CliError::Partial(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_lattice(path: &Path, lattice: &InformationLattice, provenance: &Provenance) -> CliResult<()> {
    let mut w = create(path)?;
    lattice.write_csv(&mut w, Some(provenance))?;
    w.flush()?;
    Ok(())
}

pub fn read_dense_state(path: &Path) -> CliResult<DenseState> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let state = if bytes.first() == Some(&b'{') {
        DenseState::from_json(std::str::from_utf8(&bytes).map_err(|e| CliError::Input(e.to_string()))?)?
    } else {
        DenseState::read_binary(&bytes[..])?
    };
    Ok(state)
}

pub fn lattice(a: &LatticeArgs) -> CliResult<()> {
    let lattice = match a.input_format {
        InputFormat::Dense => {
            let state = read_dense_state(&a.input)?;
            local_information(&mut dense_entropy_provider(&state)?)?
        }
        InputFormat::Mps => {
            let file = File::open(&a.input).map_err(|e| CliError::Input(format!("{}: {e}", a.input.display())))?;
            let mps = MatrixProductState::read(BufReader::new(file))?;
            if mps.discarded_weight() > 0.0 {
                eprintln!(
                    "note: MPS was truncated (discarded weight {:e})",
                    mps.discarded_weight()
                );
            }
            let mut provider = mps_entropy_provider(&mps, a.cache)?;
            let lattice = local_information(&mut provider)?;
            let s = provider.stats();
            eprintln!(
                "contractions={} cache_hits={} cache_misses={}",
                s.contractions, s.cache_hits, s.cache_misses
            );
            lattice
        }
    };
    write_lattice(&a.out, &lattice, &Provenance::new(config_hash(a), None))?;
    if a.check_sum_rule {
        let expected = lattice.num_sites() as f64 * (lattice.local_dim() as f64).log2();
        let residual = (lattice.total() - expected).abs();
        println!(
            "sum_rule total={} expected={expected} residual={residual:e}",
            lattice.total()
        );
        if residual > SUM_RULE_TOL * lattice.num_sites() as f64 {
            return Err(CliError::Numerical(format!("sum rule violated: residual {residual:e}")));
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct ProvenanceJson {
    pub version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl From<&Provenance> for ProvenanceJson {
    fn from(p: &Provenance) -> Self {
        ProvenanceJson {
            version: p.version.clone(),
            config_hash: p.config_hash.clone(),
            seed: p.seed,
        }
    }
}

/// Summary file: the length summary plus provenance and diagnostics.
#[derive(Serialize, Deserialize)]
pub struct SummaryFile {
    #[serde(flatten)]
    pub summary: SummaryRecord,
    pub energy: f64,
    pub backend: Backend,
    pub flags: RecordFlags,
    pub provenance: ProvenanceJson,
}

pub fn kitaev(a: &KitaevArgs) -> CliResult<()> {
    let state = match a.state {
        KitaevState::Ground => StateChoice::Ground,
        KitaevState::Midspectrum => StateChoice::MidspectrumEven,
    };
    let realization = match &a.realization {
        Some(path) => KitaevRealization::from_json(&read_text(path)?)?,
        None => sample_disorder(a.sites.expect("clap requires L"), a.delta, a.g, a.seed)?,
    };
    let choice = match a.backend {
        BackendArg::Auto => BackendChoice::Auto,
        BackendArg::Dense => BackendChoice::Dense,
        BackendArg::Gaussian => BackendChoice::Gaussian,
    };
    let backend = resolve_backend(choice, state, realization.g, realization.sites)?;
    if a.out_state.is_some() && backend != Backend::Dense {
        return Err(CliError::Input("--out-state needs the dense backend".into()));
    }
    if a.out_covariance.is_some() && backend != Backend::Gaussian {
        return Err(CliError::Input("--out-covariance needs the gaussian backend".into()));
    }
    let provenance = Provenance::new(config_hash(&(a, &realization)), Some(realization.seed));
    let solved = solve_realization(&realization, backend, state)?;

    if let Some(path) = &a.out_realization {
        fs::write(path, realization.to_json() + "\n")?;
    }
    if let (Some(path), Some(st)) = (&a.out_state, &solved.state) {
        if path.extension().is_some_and(|e| e == "json") {
            fs::write(path, st.to_json() + "\n")?;
        } else {
            let mut w = create(path)?;
            st.write_binary(&mut w)?;
            w.flush()?;
        }
    }
    if let Some(path) = &a.out_covariance {
        let gc = ground_covariance(&realization.coupling()?)?;
        let mut w = create(path)?;
        writeln!(w, "{}", provenance.comment_line())?;
        gc.covariance.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.out_lattice {
        write_lattice(path, &solved.lattice, &provenance)?;
    }
    let summary = LengthSummary::from_profile(&info_per_scale(&solved.lattice)).to_record();
    let file = SummaryFile {
        summary,
        energy: solved.energy,
        backend,
        flags: solved.flags.clone(),
        provenance: (&provenance).into(),
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| CliError::Input(e.to_string()))? + "\n";
    match &a.out_summary {
        Some(path) => fs::write(path, json)?,
        None => print!("{json}"),
    }
    if solved.flags.any() {
        eprintln!("warning: realization flagged {:?}", solved.flags);
    }
    Ok(())
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn aggregate_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.aggregate.csv"))
}

pub fn ensemble(a: &EnsembleArgs) -> CliResult<()> {
    let config = SweepConfig::from_json(&read_text(&a.config)?)?;
    let jobs = a.jobs.or(config.jobs).unwrap_or_else(default_jobs);
    let hash = config.hash();

    let mut existing = Vec::new();
    if a.resume && a.out.exists() {
        let file = File::open(&a.out)?;
        existing = read_records(BufReader::new(file))?;
        if let Some(r) = existing.iter().find(|r| r.config_hash != hash) {
            return Err(CliError::Input(format!(
                "{} holds records of config {}, not {hash}",
                a.out.display(),
                r.config_hash
            )));
        }
    }
    let valid: HashSet<TaskKey> = config.tasks().into_iter().collect();
    existing.retain(|r| valid.contains(&r.key()));
    let skip: HashSet<TaskKey> = existing.iter().map(|r| r.key()).collect();

    // rewrite the kept records so a torn final line is dropped
    let mut w = create(&a.out)?;
    for r in &existing {
        writeln!(w, "{}", r.to_json_line())?;
    }
    let mut records = existing;
    let report = run_sweep(&config, jobs, &skip, |r| {
        writeln!(w, "{}", r.to_json_line())?;
        w.flush()?;
        records.push(r.clone());
        Ok(())
    })?;
    w.flush()?;
    drop(w);

    if a.resume && report.skipped > 0 {
        records.sort_by_key(|r| r.key());
        let mut w = create(&a.out)?;
        for r in &records {
            writeln!(w, "{}", r.to_json_line())?;
        }
        w.flush()?;
    }

    let stats = aggregate(&records);
    let agg_path = a.aggregate.clone().unwrap_or_else(|| aggregate_path(&a.out));
    let mut w = create(&agg_path)?;
    stats.write_csv(&mut w, Some(&Provenance::new(hash, Some(config.base_seed))))?;
    w.flush()?;
    eprintln!(
        "records: {} new, {} kept, {} failed",
        report.completed + report.failed,
        report.skipped,
        report.failed
    );
    let failed = records.iter().filter(|r| !r.ok).count();
    if failed > 0 {
        return Err(CliError::Partial(format!("{failed} realization(s) failed")));
    }
    Ok(())
}

pub fn make_state(a: &MakeStateArgs) -> CliResult<()> {
    let state = match a.kind {
        StateKind::Product => DenseState::product_zero(a.sites)?,
        StateKind::Ghz => DenseState::ghz(a.sites)?,
        StateKind::Bell => DenseState::bell_pairs(a.sites)?,
        StateKind::Haar => haar_random_state(a.sites, a.seed)?,
    };
    match a.format {
        StateFormat::Binary => {
            let mut w = create(&a.out)?;
            state.write_binary(&mut w)?;
            w.flush()?;
        }
        StateFormat::Json => fs::write(&a.out, state.to_json() + "\n")?,
        StateFormat::Mps => {
            let mps = mps_from_dense(&state, a.chi_max, a.trunc_eps)?;
            let mut w = create(&a.out)?;
            mps.write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
