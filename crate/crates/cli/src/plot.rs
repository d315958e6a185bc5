use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use infolattice::ensemble::read_records;
use infolattice::io::{config_hash, fmt_f64, read_provenance, Provenance};
use infolattice::lengths::{central_window, fit_alpha, triangle_average};
use infolattice::{info_per_scale, InformationLattice};

use crate::commands::{read_text, CliError, CliResult};
use crate::{PlotArgs, PlotKind};

fn load_lattice(path: &Path) -> CliResult<(InformationLattice, Option<Provenance>)> {
    let text = read_text(path)?;
    Ok((InformationLattice::from_csv_str(&text, 2)?, read_provenance(&text)))
}

pub fn plotdata(a: &PlotArgs) -> CliResult<()> {
    let mut out = Vec::new();
    let seed = match &a.lattice {
        Some(path) => {
            let (lattice, prov) = load_lattice(path)?;
            match a.kind {
                PlotKind::PerScale => per_scale(&mut out, &lattice)?,
                PlotKind::LatticeHeatmap => heatmap(&mut out, &lattice)?,
                PlotKind::AlphaFit => alpha_fit(&mut out, &lattice, a.ell_min, a.ell_max)?,
            }
            prov.and_then(|p| p.seed)
        }
        None => {
            if a.kind != PlotKind::PerScale {
                return Err(CliError::Input("--profiles supports only --kind per-scale".into()));
            }
            profile_means(&mut out, &a.profiles)?;
            None
        }
    };
    let mut w = BufWriter::new(File::create(&a.out)?);
    writeln!(w, "{}", Provenance::new(config_hash(a), seed).comment_line())?;
    w.write_all(&out)?;
    w.flush()?;
    Ok(())
}

fn per_scale(w: &mut Vec<u8>, lattice: &InformationLattice) -> CliResult<()> {
    writeln!(w, "ell,I_ell")?;
    for (ell, v) in info_per_scale(lattice).totals.iter().enumerate() {
        writeln!(w, "{ell},{}", fmt_f64(*v))?;
    }
    Ok(())
}

fn heatmap(w: &mut Vec<u8>, lattice: &InformationLattice) -> CliResult<()> {
    writeln!(w, "ell,two_n,i")?;
    for (id, v) in lattice.iter() {
        writeln!(w, "{},{},{}", id.ell, id.two_n(), fmt_f64(v))?;
    }
    Ok(())
}

/// `alpha_times_invsq` is the fitted curve alpha/ell^2; `i_avg_times_ell_sq`
/// is the pointwise estimate of alpha.
fn alpha_fit(w: &mut Vec<u8>, lattice: &InformationLattice, ell_min: usize, ell_max: Option<usize>) -> CliResult<()> {
    let averages = triangle_average(lattice)?;
    let (_, width) = central_window(lattice.num_sites());
    let ell_max = ell_max.unwrap_or(width.saturating_sub(1));
    let fit = fit_alpha(&averages, ell_min, ell_max)?;
    writeln!(w, "# alpha={} stderr={}", fmt_f64(fit.alpha), fmt_f64(fit.stderr))?;
    writeln!(w, "ell,i_avg,alpha_times_invsq,i_avg_times_ell_sq")?;
    for ell in ell_min..=ell_max {
        let Some(avg) = averages[ell] else { continue };
        let sq = (ell * ell) as f64;
        writeln!(
            w,
            "{ell},{},{},{}",
            fmt_f64(avg),
            fmt_f64(fit.alpha / sq),
            fmt_f64(avg * sq)
        )?;
    }
    Ok(())
}

fn profile_means(w: &mut Vec<u8>, paths: &[std::path::PathBuf]) -> CliResult<()> {
    // (L, delta bits) -> (sum per ell, count)
    let mut acc: BTreeMap<(usize, u64), (f64, Vec<f64>, usize)> = BTreeMap::new();
    for path in paths {
        let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for r in read_records(BufReader::new(file))? {
            if !r.ok || r.flagged {
                continue;
            }
            let Some(profile) = &r.profile else { continue };
            let e = acc
                .entry((r.sites, r.delta.to_bits()))
                .or_insert_with(|| (r.delta, vec![0.0; profile.len()], 0));
            if e.1.len() != profile.len() {
                return Err(CliError::Input(format!("profile length mismatch at L={}", r.sites)));
            }
            e.1.iter_mut().zip(profile).for_each(|(s, v)| *s += v);
            e.2 += 1;
        }
    }
    if acc.is_empty() {
        return Err(CliError::Input(
            "no usable profiles (sweep needs keep_profile=true)".into(),
        ));
    }
    let mut points: Vec<_> = acc.into_iter().collect();
    points.sort_by(|a, b| a.0 .0.cmp(&b.0 .0).then(a.1 .0.total_cmp(&b.1 .0)));
    writeln!(w, "L,delta,ell,I_ell_mean,count")?;
    for ((sites, _), (delta, sums, n)) in points {
        for (ell, s) in sums.iter().enumerate() {
            writeln!(w, "{sites},{},{ell},{},{n}", fmt_f64(delta), fmt_f64(s / n as f64))?;
        }
    }
    Ok(())
}
