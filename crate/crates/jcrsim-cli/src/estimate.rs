//! `jcrsim estimate`: run one estimator on a stored block capture,
//! emulating any ADC resolution on the recorded samples — the
//! collect-once, quantize-later workflow.

use crate::scenario::ScenarioFile;
use crate::CliError;
use anyhow::{anyhow, bail};
use jcrsim::channel::linear_to_db;
use jcrsim::estimation::{
    gamp_estimate, traditional_estimate, ChannelEstimate, EstimatorMethod, GampConfig,
};
use jcrsim::frontend::{quantize, BitDepth, QuantizerSpec};
use jcrsim::io::{read_block_dump, write_estimate_dump, BlockDump, EstimateHeader};
use jcrsim::metrics::{nmse, peak_bins, PeakGeometry, RangeConvention};
use std::path::PathBuf;

pub struct EstimateArgs {
    pub dump: PathBuf,
    pub scenario: String,
    pub out: Option<PathBuf>,
    pub method: Option<String>,
    pub bits: Option<String>,
    pub snr_db: Option<f64>,
    pub prior: Option<String>,
    pub components: Option<usize>,
    /// Root-seed override, needed for the ground-truth diagnostic when the
    /// capture came from a run that overrode the scenario's seed.
    pub seed: Option<u64>,
}

/// Noise variance for the solver's output model, from the capture's power
/// and its recorded (or overridden) SNR. When the capture itself is
/// quantized, its power is first mapped back to the pre-quantization power
/// through the known distortion fraction of its bit depth.
fn derive_noise_variance(dump: &BlockDump, snr_db: f64) -> anyhow::Result<f64> {
    let mean_power = dump
        .samples
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        / dump.samples.len() as f64;
    let distortion = dump.header.bits.distortion_fraction().map_err(|e| anyhow!(e))?;
    let pre_quant_power = mean_power / (1.0 - distortion);
    Ok(pre_quant_power / (1.0 + 10f64.powf(snr_db / 10.0)))
}

pub fn run(args: &EstimateArgs) -> Result<(), CliError> {
    let mut scenario = ScenarioFile::load(&args.scenario).map_err(CliError::Config)?;
    if let Some(seed) = args.seed {
        scenario.root_seed = seed;
    }
    if let Some(prior) = &args.prior {
        scenario.estimator.gamp.prior = Some(prior.clone());
    }
    if let Some(v) = args.components {
        scenario.estimator.gamp.components = Some(v);
    }
    let realized = scenario.realize().map_err(CliError::Config)?;

    let dump = read_block_dump(&args.dump)
        .map_err(|e| CliError::Config(anyhow!(e)))?;
    if dump.header.m != realized.op.num_angle_bins()
        || dump.header.n != realized.op.sequence_len()
    {
        return Err(CliError::Config(anyhow!(
            "capture is {}×{} but the scenario describes {} antennas × {} samples",
            dump.header.m,
            dump.header.n,
            realized.op.num_angle_bins(),
            realized.op.sequence_len()
        )));
    }

    let method = match &args.method {
        Some(label) => jcrsim::io::parse_method(label).map_err(|e| CliError::Config(anyhow!(e)))?,
        None => EstimatorMethod::Traditional,
    };
    let bits = match &args.bits {
        Some(label) => jcrsim::io::parse_bits(label).map_err(|e| CliError::Config(anyhow!(e)))?,
        None => dump.header.bits,
    };
    if let BitDepth::Finite(recorded) = dump.header.bits {
        let finer = match bits {
            BitDepth::Infinite => true,
            BitDepth::Finite(requested) => requested > recorded,
        };
        if finer {
            eprintln!(
                "note: capture was recorded at {recorded} bits; estimating at {bits} cannot add information"
            );
        }
    }

    let (q, resolved) = quantize(&dump.samples, &QuantizerSpec::new(bits))
        .map_err(|e| CliError::Compute(anyhow!(e)))?;

    let estimate: ChannelEstimate = match method {
        EstimatorMethod::Traditional => {
            traditional_estimate(&q, &realized.op).map_err(|e| CliError::Compute(anyhow!(e)))?
        }
        EstimatorMethod::Gamp => {
            let snr_db = args
                .snr_db
                .or(dump.header.snr_db)
                .ok_or_else(|| {
                    CliError::Config(anyhow!(
                        "gamp needs a noise level: the capture records no SNR, pass --snr-db"
                    ))
                })?;
            let solver = GampConfig {
                noise_variance: derive_noise_variance(&dump, snr_db)
                    .map_err(CliError::Config)?,
                ..realized.sweep.gamp.clone()
            };
            gamp_estimate(&q, &realized.op, &resolved, &solver)
                .map_err(|e| CliError::Compute(anyhow!(e)))?
        }
    };

    let out_path = match &args.out {
        Some(p) => p.clone(),
        None => {
            let stem = args
                .dump
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "capture".into());
            args.dump
                .with_file_name(format!("{stem}.{method}-{bits}.est.bin"))
        }
    };
    let header = EstimateHeader {
        m: estimate.x_hat.nrows(),
        k: estimate.x_hat.ncols(),
        method,
        bits,
        snr_db: args.snr_db.or(dump.header.snr_db),
        seed: dump.header.seed,
        iterations: estimate.diagnostics.iterations,
        converged: estimate.diagnostics.converged,
    };
    write_estimate_dump(&out_path, &header, &estimate.x_hat)
        .map_err(|e| CliError::Compute(anyhow!(e)))?;

    print_summary(&args.dump, &out_path, &realized, bits, &estimate)
        .map_err(CliError::Compute)?;
    Ok(())
}

fn print_summary(
    dump_path: &std::path::Path,
    out_path: &std::path::Path,
    realized: &crate::scenario::Realized,
    bits: BitDepth,
    estimate: &ChannelEstimate,
) -> anyhow::Result<()> {
    println!(
        "estimated {} at {} bits with {} ({} iterations, converged: {})",
        dump_path.display(),
        bits,
        estimate.method,
        estimate.diagnostics.iterations,
        estimate.diagnostics.converged
    );
    match nmse(&estimate.x_hat, realized.channel.x()) {
        Ok(linear) => println!(
            "nmse vs scenario ground truth: {:.3} dB",
            linear_to_db(linear)
        ),
        Err(e) => println!("nmse vs scenario ground truth: unavailable ({e})"),
    }
    if let Some(prior) = &estimate.diagnostics.learned_prior {
        println!(
            "learned prior: sparsity {:.4}, {} active component(s):",
            prior.sparsity,
            prior.components.len()
        );
        for (i, c) in prior.components.iter().enumerate() {
            println!(
                "  [{i}] weight {:.3e}  mean {:.3e}{:+.3e}i  variance {:.3e}",
                c.weight, c.mean.re, c.mean.im, c.variance
            );
        }
    }

    let grid_cells = estimate.x_hat.len();
    if grid_cells == 0 {
        bail!("empty estimate grid");
    }
    let geometry = PeakGeometry {
        bandwidth_hz: realized.frame.bandwidth,
        array: realized.geometry,
        range_convention: RangeConvention::TwoWay,
    };
    let peaks = peak_bins(&estimate.x_hat, grid_cells.min(5), &geometry)?;
    if peaks.is_empty() {
        println!("no strict local maxima found");
    } else {
        let top = peaks[0].magnitude;
        println!("{:>10}  {:>10}  {:>8}  {:>6}  {:>6}", "range_m", "angle_deg", "rel_db", "k", "m");
        for p in &peaks {
            println!(
                "{:>10.3}  {:>10.2}  {:>8.2}  {:>6}  {:>6}",
                p.range_m,
                p.angle_rad.to_degrees(),
                20.0 * (p.magnitude / top).log10(),
                p.range_bin,
                p.angle_bin
            );
        }
    }
    println!("wrote {}", out_path.display());
    Ok(())
}
