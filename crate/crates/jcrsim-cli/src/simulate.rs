//! `jcrsim simulate`: run the scenario's sweep grid and persist every
//! artifact — raw block captures, per-cell estimates, result tables, and a
//! checksummed manifest.

use crate::manifest::{config_hash, RunManifest};
use crate::scenario::{Realized, ScenarioFile};
use crate::{CliError, Overrides};
use anyhow::{anyhow, Context};
use jcrsim::channel::linear_to_db;
use jcrsim::estimation::{
    gamp_estimate, traditional_estimate, ChannelEstimate, EstimatorMethod, GampConfig,
};
use jcrsim::frontend::{
    quantize, synthesize_received, BitDepth, NoiseSpec, QuantizerSpec, SynthesisConfig,
};
use jcrsim::io::{
    write_block_dump, write_estimate_dump, write_results_csv, write_timings_csv, BlockHeader,
    EstimateHeader,
};
use jcrsim::metrics::{cell_seed, nmse, sweep_reference, SweepRecord};
use ndarray::Array2;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct SimulateArgs {
    pub scenario: String,
    pub out: Option<PathBuf>,
    pub overrides: Overrides,
}

/// Pick the run directory: flag, then scenario, then the output root
/// environment variable, then `./runs/<scene-id>`.
pub fn resolve_out_dir(flag: Option<&Path>, scenario: &ScenarioFile) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = &scenario.output_dir {
        return dir.clone();
    }
    if let Ok(root) = std::env::var("JCRSIM_OUT") {
        if !root.is_empty() {
            return Path::new(&root).join(&scenario.scene_id);
        }
    }
    Path::new("runs").join(&scenario.scene_id)
}

/// Fail before any compute if the directory cannot be created or written.
fn probe_writable(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"probe")
        .with_context(|| format!("output directory {} is not writable", dir.display()))?;
    std::fs::remove_file(&probe).ok();
    Ok(())
}

/// Artifacts of one `(snr, repetition)` group: the shared pre-quantization
/// capture plus, per bit depth and method, an estimate and its result row.
struct GroupOutput {
    snr_idx: usize,
    rep: usize,
    /// Record vectors in bit-depth order, each in method order.
    per_bits: Vec<Vec<SweepRecord>>,
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let scenario = ScenarioFile::load(&args.scenario)
        .and_then(|s| args.overrides.apply(s))
        .map_err(CliError::Config)?;
    let realized = scenario.realize().map_err(CliError::Config)?;
    let hash = config_hash(&scenario).map_err(CliError::Config)?;

    let run_dir = resolve_out_dir(args.out.as_deref(), &scenario);
    probe_writable(&run_dir).map_err(CliError::Config)?;
    let blocks_dir = run_dir.join("blocks");
    let estimates_dir = run_dir.join("estimates");
    probe_writable(&blocks_dir).map_err(CliError::Config)?;
    probe_writable(&estimates_dir).map_err(CliError::Config)?;

    let reference = sweep_reference(&realized.channel, &realized.op, &realized.sweep)
        .map_err(|e| CliError::Compute(anyhow!(e)))?;

    let grid = &realized.sweep.grid;
    let mut groups = Vec::new();
    for snr_idx in 0..grid.snr_points_db.len() {
        for rep in 0..grid.seeds_per_point {
            groups.push((snr_idx, rep));
        }
    }

    let outputs: Vec<anyhow::Result<GroupOutput>> = groups
        .par_iter()
        .map(|&(snr_idx, rep)| {
            run_group(&realized, &reference, snr_idx, rep, &blocks_dir, &estimates_dir)
        })
        .collect();

    // Flatten in the sweep's canonical record order: SNR, then bit depth,
    // then repetition, then method.
    let mut by_group = std::collections::HashMap::new();
    for out in outputs {
        let out = out.map_err(CliError::Compute)?;
        by_group.insert((out.snr_idx, out.rep), out.per_bits);
    }
    let mut records: Vec<SweepRecord> = Vec::new();
    for snr_idx in 0..grid.snr_points_db.len() {
        for bits_idx in 0..grid.bit_depths.len() {
            for rep in 0..grid.seeds_per_point {
                records.extend_from_slice(&by_group[&(snr_idx, rep)][bits_idx]);
            }
        }
    }

    let mut manifest = RunManifest::new(&scenario.scene_id, hash);
    let scenario_path = run_dir.join("scenario.toml");
    std::fs::write(
        &scenario_path,
        scenario.canonical_toml().map_err(CliError::Config)?,
    )
    .map_err(|e| CliError::Compute(anyhow!(e)))
    .and_then(|()| manifest.record(&run_dir, &scenario_path).map_err(CliError::Compute))?;

    let results_path = run_dir.join("results.csv");
    write_results_csv(&results_path, &records).map_err(|e| CliError::Compute(anyhow!(e)))?;
    manifest.record(&run_dir, &results_path).map_err(CliError::Compute)?;
    let timings_path = run_dir.join("timings.csv");
    write_timings_csv(&timings_path, &records).map_err(|e| CliError::Compute(anyhow!(e)))?;
    manifest.record(&run_dir, &timings_path).map_err(CliError::Compute)?;

    for dir in [&blocks_dir, &estimates_dir] {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| CliError::Compute(anyhow!(e)))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .collect();
        paths.sort();
        for path in paths {
            manifest.record(&run_dir, &path).map_err(CliError::Compute)?;
        }
    }
    manifest.write(&run_dir).map_err(CliError::Compute)?;

    print_summary(&realized, &records);
    println!("wrote {}", run_dir.display());

    let failures: Vec<&SweepRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if failures.is_empty() {
        Ok(())
    } else {
        for r in &failures {
            eprintln!(
                "cell method={} bits={} snr_db={} seed={}: {}",
                r.method,
                r.bits,
                r.snr_db,
                r.seed,
                r.error.as_deref().unwrap_or("unknown error")
            );
        }
        Err(CliError::Compute(anyhow!(
            "{} of {} cells failed",
            failures.len(),
            records.len()
        )))
    }
}

/// Synthesize one shared capture, then estimate it at every bit depth with
/// every method, writing the dumps as we go. Mirrors the sweep cell
/// semantics exactly: the seed depends on `(snr_idx, rep)` only, so all bit
/// depths see the same block.
fn run_group(
    realized: &Realized,
    reference: &Array2<jcrsim::Complex>,
    snr_idx: usize,
    rep: usize,
    blocks_dir: &Path,
    estimates_dir: &Path,
) -> anyhow::Result<GroupOutput> {
    let config = &realized.sweep;
    let snr_db = config.grid.snr_points_db[snr_idx];
    let seed = cell_seed(config.root_seed, snr_idx, rep);

    let base = |bits: BitDepth, method: EstimatorMethod| SweepRecord {
        scene_id: config.scene_id.clone(),
        method,
        bits,
        snr_db,
        seed,
        nmse_linear: f64::NAN,
        nmse_db: f64::NAN,
        iterations: 0,
        wall_ms: 0.0,
        error: None,
    };
    let fail_all = |msg: &str| -> Vec<Vec<SweepRecord>> {
        config
            .grid
            .bit_depths
            .iter()
            .map(|&bits| {
                config
                    .methods
                    .iter()
                    .map(|&m| SweepRecord {
                        error: Some(msg.to_string()),
                        ..base(bits, m)
                    })
                    .collect()
            })
            .collect()
    };

    let synth = SynthesisConfig {
        noise: NoiseSpec::SnrDb(snr_db),
        repetitions: config.repetitions,
        seed,
    };
    let block = match synthesize_received(&realized.channel, &realized.op, &synth) {
        Ok(b) => b,
        Err(e) => {
            return Ok(GroupOutput {
                snr_idx,
                rep,
                per_bits: fail_all(&e.to_string()),
            })
        }
    };

    // The capture on disk is the pre-quantization block; `estimate --bits`
    // emulates any ADC resolution on it later, exactly as the sweep does
    // in-process.
    let header = BlockHeader {
        m: block.num_antennas(),
        n: block.num_samples(),
        seed,
        snr_db: Some(snr_db),
        bits: BitDepth::Infinite,
    };
    let block_path = blocks_dir.join(format!("s{snr_idx}_r{rep}.bin"));
    write_block_dump(&block_path, &header, block.y())
        .with_context(|| format!("writing {}", block_path.display()))?;

    let mut per_bits = Vec::with_capacity(config.grid.bit_depths.len());
    for &bits in &config.grid.bit_depths {
        let (q, resolved) = match quantize(block.y(), &QuantizerSpec::new(bits)) {
            Ok(pair) => pair,
            Err(e) => {
                per_bits.push(
                    config
                        .methods
                        .iter()
                        .map(|&m| SweepRecord {
                            error: Some(e.to_string()),
                            ..base(bits, m)
                        })
                        .collect(),
                );
                continue;
            }
        };
        let mut cell_records = Vec::with_capacity(config.methods.len());
        for &method in &config.methods {
            let start = Instant::now();
            let outcome: jcrsim::Result<ChannelEstimate> = match method {
                EstimatorMethod::Traditional => traditional_estimate(&q, &realized.op),
                EstimatorMethod::Gamp => {
                    let solver = GampConfig {
                        noise_variance: block.noise_variance(),
                        ..config.gamp.clone()
                    };
                    gamp_estimate(&q, &realized.op, &resolved, &solver)
                }
            };
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let record = match outcome.and_then(|est| Ok((nmse(&est.x_hat, reference)?, est))) {
                Ok((linear, est)) => {
                    let est_header = EstimateHeader {
                        m: est.x_hat.nrows(),
                        k: est.x_hat.ncols(),
                        method,
                        bits,
                        snr_db: Some(snr_db),
                        seed,
                        iterations: est.diagnostics.iterations,
                        converged: est.diagnostics.converged,
                    };
                    let est_path =
                        estimates_dir.join(format!("s{snr_idx}_b{bits}_r{rep}_{method}.bin"));
                    write_estimate_dump(&est_path, &est_header, &est.x_hat)
                        .with_context(|| format!("writing {}", est_path.display()))?;
                    SweepRecord {
                        nmse_linear: linear,
                        nmse_db: linear_to_db(linear),
                        iterations: est.diagnostics.iterations,
                        wall_ms,
                        ..base(bits, method)
                    }
                }
                Err(e) => SweepRecord {
                    wall_ms,
                    error: Some(e.to_string()),
                    ..base(bits, method)
                },
            };
            cell_records.push(record);
        }
        per_bits.push(cell_records);
    }
    Ok(GroupOutput {
        snr_idx,
        rep,
        per_bits,
    })
}

/// Mean NMSE per (SNR, bits, method) over the successful repetitions.
fn print_summary(realized: &Realized, records: &[SweepRecord]) {
    println!(
        "{:>8}  {:>8}  {:<12}  {:>12}  {:>5}",
        "snr_db", "bits", "method", "mean_nmse_db", "cells"
    );
    let config = &realized.sweep;
    for &snr_db in &config.grid.snr_points_db {
        for &bits in &config.grid.bit_depths {
            for &method in &config.methods {
                let scores: Vec<f64> = records
                    .iter()
                    .filter(|r| {
                        r.error.is_none()
                            && r.method == method
                            && r.bits == bits
                            && r.snr_db == snr_db
                    })
                    .map(|r| r.nmse_linear)
                    .collect();
                if scores.is_empty() {
                    continue;
                }
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                println!(
                    "{:>8}  {:>8}  {:<12}  {:>12.3}  {:>5}",
                    snr_db,
                    bits.to_string(),
                    method.to_string(),
                    linear_to_db(mean),
                    scores.len()
                );
            }
        }
    }
}
