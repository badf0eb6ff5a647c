use std::path::PathBuf;

use clap::Args;
use moseg::pipeline::{build_views, segment_views, view_kernel, Method, PipelineConfig};
use moseg::spectral::cluster_affinity;
use moseg::synth::{classification_error, prevalence_error, read_manifest};
use moseg::{load_trajectories, Error, TrajectorySet};
use rayon::prelude::*;

use crate::output::{ensure_dir, fmt_error, mean, median, write_atomic};
use crate::{Failure, PipelineArgs};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Suite manifest
    manifest: PathBuf,
    /// Comma-separated methods
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "affine,homography,fundamental,keradd,coreg,subset"
    )]
    methods: Vec<String>,
    /// Output directory
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

type Cell = Result<f64, Failure>;

struct Row {
    name: String,
    prevalence: Option<f64>,
    cells: Vec<Cell>,
}

fn evaluate(t: &TrajectorySet, m: usize, methods: &[Method], cfg: &PipelineConfig) -> Vec<Cell> {
    let Some(truth) = t.labels() else {
        let f = Failure::from(Error::InvalidTrajectories("bench needs ground-truth labels".into()));
        return vec![Err(f); methods.len()];
    };
    let score = |labels: &[usize]| classification_error(labels, truth);
    if methods.iter().all(|m| m.single_view().is_some()) {
        // only build the views that were asked for
        return methods
            .iter()
            .map(|method| {
                let opts = cfg.fusion_options();
                let k = view_kernel(t, method.single_view().unwrap(), cfg)?;
                let (labeling, _) = cluster_affinity(&k, m, opts.restarts, opts.seed)?;
                Ok(score(&labeling.labels)?)
            })
            .collect();
    }
    match build_views(t, m, cfg) {
        Ok(views) => methods
            .iter()
            .map(|&method| Ok(segment_views(&views, method, cfg).and_then(|s| score(&s.labeling.labels))?))
            .collect(),
        Err(e) => vec![Err(Failure::from(e)); methods.len()],
    }
}

fn table(methods: &[Method], rows: &[Row]) -> String {
    let mut s = String::from("sequence,prevalence");
    for m in methods {
        s.push_str(&format!(",{m}"));
    }
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{}", r.name, fmt_error(r.prevalence)));
        for c in &r.cells {
            match c {
                Ok(e) => s.push_str(&format!(",{e:.6}")),
                Err(f) => s.push_str(&format!(",error:{}", f.category)),
            }
        }
        s.push('\n');
    }
    type Stat = fn(&[f64]) -> Option<f64>;
    let stats: [(&str, Stat); 2] = [("mean", mean), ("median", median)];
    for (label, stat) in stats {
        let prev: Vec<f64> = rows.iter().filter_map(|r| r.prevalence).collect();
        s.push_str(&format!("{label},{}", fmt_error(stat(&prev))));
        for k in 0..methods.len() {
            let col: Vec<f64> = rows.iter().filter_map(|r| r.cells[k].as_ref().ok().copied()).collect();
            s.push_str(&format!(",{}", fmt_error(stat(&col))));
        }
        s.push('\n');
    }
    s
}

pub fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let methods: Vec<Method> = args.methods.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
    if methods.is_empty() {
        return Err(Error::Config("no methods given".into()).into());
    }
    let cfg = args.pipeline.config(&methods);
    let entries = read_manifest(&args.manifest)?;
    ensure_dir(&args.output)?;
    let pool = args.pipeline.pool()?;
    let rows: Vec<Row> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| match load_trajectories(&e.path) {
                Ok(t) => Row {
                    name: e.name.clone(),
                    prevalence: t.labels().map(prevalence_error),
                    cells: evaluate(&t, e.num_motions, &methods, &cfg),
                },
                Err(err) => Row {
                    name: e.name.clone(),
                    prevalence: None,
                    cells: vec![Err(Failure::from(err)); methods.len()],
                },
            })
            .collect()
    });
    let text = table(&methods, &rows);
    write_atomic(&args.output.join("bench.report.csv"), &text)?;
    print!("{}", text.replace(',', "\t"));

    let mut first = None;
    for r in &rows {
        for (c, m) in r.cells.iter().zip(&methods) {
            if let Err(f) = c {
                eprintln!("{} / {m}: {f}", r.name);
                first.get_or_insert_with(|| f.clone());
            }
        }
    }
    first.map_or(Ok(()), Err)
}
