//! `jcrsim report`: reshape a results table into tidy plot-data files —
//! NMSE against ADC resolution at each SNR, NMSE against SNR per
//! resolution, and normalized range-angle heatmap grids for every stored
//! estimate.

use crate::CliError;
use anyhow::{anyhow, Context};
use jcrsim::channel::linear_to_db;
use jcrsim::frontend::BitDepth;
use jcrsim::io::{read_estimate_dump, read_results_csv, ResultRow};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub struct ReportArgs {
    /// A run directory (containing `results.csv` and `estimates/`) or a
    /// bare results CSV path.
    pub input: PathBuf,
    pub out: Option<PathBuf>,
}

/// Floor applied to normalized heatmap magnitudes.
const HEATMAP_FLOOR_DB: f64 = -60.0;

/// Sort key placing finite depths in ascending order and the unquantized
/// model last.
fn bits_key(bits: BitDepth) -> u32 {
    match bits {
        BitDepth::Finite(b) => b as u32,
        BitDepth::Infinite => u32::MAX,
    }
}

/// Order-preserving integer encoding of an f64 axis value (offset-binary
/// of the IEEE bits), so it can live inside a BTreeMap sort key.
fn f64_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 0 {
        bits | (1 << 63)
    } else {
        !bits
    }
}

#[derive(Default)]
struct Agg {
    sum_linear: f64,
    count: usize,
}

/// One aggregated output row: scene, method, the fixed axis label, the
/// sweep axis label, contributing seeds, and the mean linear NMSE.
type SeriesRow = (String, String, String, String, usize, f64);

/// Group rows by `(scene, method, key_a, key_b)` in that sort order,
/// averaging linear NMSE and skipping NaN scores (failed cells appear in
/// the table that way). Label functions render the two axis values.
fn series<KA, KB, LA, LB>(
    rows: &[ResultRow],
    key_a: KA,
    key_b: KB,
    label_a: LA,
    label_b: LB,
) -> Vec<SeriesRow>
where
    KA: Fn(&ResultRow) -> u64,
    KB: Fn(&ResultRow) -> u64,
    LA: Fn(&ResultRow) -> String,
    LB: Fn(&ResultRow) -> String,
{
    let mut groups: BTreeMap<(String, String, u64, u64), (String, String, Agg)> = BTreeMap::new();
    for row in rows {
        if !row.nmse_linear.is_finite() {
            continue;
        }
        let key = (
            row.scene_id.clone(),
            row.method.to_string(),
            key_a(row),
            key_b(row),
        );
        let entry = groups
            .entry(key)
            .or_insert_with(|| (label_a(row), label_b(row), Agg::default()));
        entry.2.sum_linear += row.nmse_linear;
        entry.2.count += 1;
    }
    groups
        .into_iter()
        .map(|((scene, method, _, _), (a, b, agg))| {
            (
                scene,
                method,
                a,
                b,
                agg.count,
                agg.sum_linear / agg.count as f64,
            )
        })
        .collect()
}

fn write_series_csv(
    path: &Path,
    axis_names: (&str, &str),
    rows: &[SeriesRow],
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    w.write_record([
        "scene_id",
        "method",
        axis_names.0,
        axis_names.1,
        "seed_count",
        "mean_nmse_linear",
        "mean_nmse_db",
    ])?;
    for (scene, method, fixed, axis, count, mean) in rows {
        w.write_record([
            scene.as_str(),
            method.as_str(),
            fixed.as_str(),
            axis.as_str(),
            &count.to_string(),
            &format!("{mean}"),
            &format!("{}", linear_to_db(*mean)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn heatmap_csv(estimate_path: &Path, out_dir: &Path) -> anyhow::Result<PathBuf> {
    let dump = read_estimate_dump(estimate_path).map_err(|e| anyhow!(e))?;
    let stem = estimate_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "estimate".into());
    let out_path = out_dir.join(format!("heatmap_{stem}.csv"));

    let peak = dump.x_hat.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let mut w = csv::Writer::from_path(&out_path)
        .with_context(|| format!("writing {}", out_path.display()))?;
    w.write_record(["angle_bin", "range_bin", "magnitude_db"])?;
    for ((m, k), c) in dump.x_hat.indexed_iter() {
        let rel_db = if peak > 0.0 && c.norm() > 0.0 {
            (20.0 * (c.norm() / peak).log10()).max(HEATMAP_FLOOR_DB)
        } else {
            HEATMAP_FLOOR_DB
        };
        w.write_record([m.to_string(), k.to_string(), format!("{rel_db}")])?;
    }
    w.flush()?;
    Ok(out_path)
}

pub fn run(args: &ReportArgs) -> Result<(), CliError> {
    let (csv_path, estimates_dir) = if args.input.is_dir() {
        (
            args.input.join("results.csv"),
            Some(args.input.join("estimates")),
        )
    } else {
        (args.input.clone(), None)
    };
    let rows = read_results_csv(&csv_path).map_err(|e| CliError::Config(anyhow!(e)))?;
    if rows.is_empty() {
        return Err(CliError::Config(anyhow!(
            "{} holds no result rows",
            csv_path.display()
        )));
    }

    let out_dir = match &args.out {
        Some(dir) => dir.clone(),
        None => csv_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("report"),
    };
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(CliError::Config)?;

    // NMSE against ADC resolution: one block per (scene, method, SNR),
    // finite depths ascending, unquantized last.
    let bits_rows = series(
        &rows,
        |r| f64_key(r.snr_db),
        |r| bits_key(r.bits) as u64,
        |r| format!("{}", r.snr_db),
        |r| r.bits.to_string(),
    );
    let bits_path = out_dir.join("nmse_vs_bits.csv");
    write_series_csv(&bits_path, ("snr_db", "bits"), &bits_rows).map_err(CliError::Compute)?;

    // NMSE against SNR: one series per (scene, method, bit depth), SNR
    // ascending within each series.
    let snr_rows = series(
        &rows,
        |r| bits_key(r.bits) as u64,
        |r| f64_key(r.snr_db),
        |r| r.bits.to_string(),
        |r| format!("{}", r.snr_db),
    );
    let snr_path = out_dir.join("nmse_vs_snr.csv");
    write_series_csv(&snr_path, ("bits", "snr_db"), &snr_rows).map_err(CliError::Compute)?;

    let mut written = vec![bits_path, snr_path];
    if let Some(dir) = estimates_dir {
        if dir.is_dir() {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| CliError::Compute(anyhow!(e)))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().map_or(false, |ext| ext == "bin"))
                .collect();
            paths.sort();
            for path in paths {
                written.push(heatmap_csv(&path, &out_dir).map_err(CliError::Compute)?);
            }
        }
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
