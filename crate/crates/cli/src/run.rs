use std::path::{Path, PathBuf};

use clap::Args;
use moseg::fusion::trace_csv;
use moseg::ork::write_affinity;
use moseg::pipeline::{segment_with_kernels, Method, PipelineConfig};
use moseg::spectral::SpectralEmbedding;
use moseg::synth::classification_error;
use moseg::trajectory::format_sig9;
use moseg::{load_trajectories, Error, Result};
use rayon::prelude::*;

use crate::output::{collect_jobs, ensure_dir, fmt_error, labels_text, mean, median, write_atomic, Job};
use crate::{Failure, PipelineArgs};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Trajectory files or suite manifests
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Number of motions [default: from the manifest or the file's labels]
    #[arg(short = 'M', long)]
    motions: Option<usize>,
    /// affine, homography, fundamental, keradd, coreg or subset
    #[arg(short, long, default_value = "subset")]
    method: String,
    /// Output directory
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Write each view's kernel
    #[arg(long)]
    dump_kernels: bool,
    /// Kernel dump format: `dense` or `coo`
    #[arg(long, default_value = "dense")]
    kernel_format: String,
    /// Write the final spectral embeddings
    #[arg(long)]
    dump_embeddings: bool,
    /// Write the co-regularization objective trace
    #[arg(long)]
    dump_trace: bool,
}

struct Outcome {
    name: String,
    points: usize,
    motions: usize,
    error: Option<f64>,
    converged: bool,
}

fn embedding_text(e: &SpectralEmbedding) -> String {
    let mut s = format!("{} {}\n", e.basis.nrows(), e.basis.ncols());
    for row in e.basis.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| format_sig9(v)).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s
}

fn process(job: &Job, args: &RunArgs, method: Method, cfg: &PipelineConfig, out: &Path) -> Result<Outcome> {
    let t = load_trajectories(&job.path)?;
    let m = args.motions.or(job.motions).or(t.num_motions()).ok_or_else(|| {
        Error::Config(format!(
            "{}: no motion count given and the file is unlabelled",
            job.name
        ))
    })?;
    let (seg, kernels) = segment_with_kernels(&t, m, method, cfg)?;
    if seg.labeling.degenerate {
        log::warn!("{}: k-means left a cluster empty", job.name);
    }
    if !seg.converged {
        log::warn!("{}: {method} did not converge", job.name);
    }

    write_atomic(
        &out.join(format!("{}.labels.txt", job.name)),
        &labels_text(&seg.labeling.labels),
    )?;
    if args.dump_kernels {
        let ext = if args.kernel_format == "coo" { "coo" } else { "txt" };
        for k in &kernels {
            let view = k.kind.map_or("fused", |kind| kind.name());
            let path = out.join(format!("{}.{view}.kernel.{ext}", job.name));
            // the extension selects the format, so keep it on the temp name
            let tmp = out.join(format!(".{}.{view}.kernel.tmp.{ext}", job.name));
            write_affinity(k, &tmp)?;
            std::fs::rename(&tmp, &path).map_err(|e| Error::Io { path, source: e })?;
        }
    }
    if args.dump_embeddings {
        for e in &seg.embeddings {
            let view = e.view.map_or("fused", |kind| kind.name());
            write_atomic(
                &out.join(format!("{}.{view}.embedding.txt", job.name)),
                &embedding_text(e),
            )?;
        }
    }
    if args.dump_trace {
        match &seg.trace {
            Some(trace) => write_atomic(&out.join(format!("{}.trace.csv", job.name)), &trace_csv(trace))?,
            None => log::warn!("--dump-trace only applies to coreg"),
        }
    }
    let error = t
        .labels()
        .map(|truth| classification_error(&seg.labeling.labels, truth))
        .transpose()?;
    Ok(Outcome {
        name: job.name.clone(),
        points: t.num_points(),
        motions: m,
        error,
        converged: seg.converged,
    })
}

fn report(method: Method, rows: &[(String, std::result::Result<Outcome, Failure>)]) -> String {
    let mut s = String::from("sequence,method,points,motions,error,converged,status\n");
    let mut errors = Vec::new();
    for (name, r) in rows {
        match r {
            Ok(o) => {
                if let Some(e) = o.error {
                    errors.push(e);
                }
                s.push_str(&format!(
                    "{},{method},{},{},{},{},ok\n",
                    o.name,
                    o.points,
                    o.motions,
                    fmt_error(o.error),
                    o.converged
                ));
            }
            Err(f) => s.push_str(&format!("{name},{method},,,,,{}\n", f.category)),
        }
    }
    s.push_str(&format!("mean,{method},,,{},,\n", fmt_error(mean(&errors))));
    s.push_str(&format!("median,{method},,,{},,\n", fmt_error(median(&errors))));
    s
}

pub fn run(args: &RunArgs) -> std::result::Result<(), Failure> {
    let method: Method = args.method.parse()?;
    if !matches!(args.kernel_format.as_str(), "dense" | "coo") {
        return Err(Error::Config(format!("unknown kernel format `{}`", args.kernel_format)).into());
    }
    if args.motions == Some(0) {
        return Err(Error::Config("-M must be positive".into()).into());
    }
    let cfg = args.pipeline.config(&[method]);
    let jobs = collect_jobs(&args.inputs)?;
    ensure_dir(&args.output)?;
    let pool = args.pipeline.pool()?;
    let results: Vec<(String, std::result::Result<Outcome, Failure>)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let r = process(job, args, method, &cfg, &args.output).map_err(Failure::from);
                (job.name.clone(), r)
            })
            .collect()
    });
    write_atomic(
        &args.output.join(format!("{method}.report.csv")),
        &report(method, &results),
    )?;

    let mut first_err = None;
    for (name, r) in results {
        match r {
            Ok(o) => println!(
                "{name}: {}",
                o.error.map_or("labels written".into(), |e| format!("error {e:.4}"))
            ),
            Err(f) => {
                eprintln!("{name}: {f}");
                first_err.get_or_insert(f);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}
