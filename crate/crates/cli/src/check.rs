use std::path::PathBuf;

use clap::Args;
use moseg::{load_trajectories, prune_short_tracks, TrajectorySet};

use crate::Failure;

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Trajectory files to validate
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Also report how many points survive pruning at this track length
    #[arg(long)]
    min_frames: Option<usize>,
}

fn summary(t: &TrajectorySet) -> String {
    let n = t.num_points();
    let lengths: Vec<usize> = (0..n).map(|i| t.visible_count(i)).collect();
    let complete = lengths.iter().filter(|&&l| l == t.num_frames()).count();
    let motions = t.num_motions().map_or("unlabelled".to_string(), |m| format!("M={m}"));
    format!(
        "F={} N={n} {motions} track length {}..{} complete={complete}",
        t.num_frames(),
        lengths.iter().min().unwrap_or(&0),
        lengths.iter().max().unwrap_or(&0),
    )
}

pub fn check(args: &CheckArgs) -> Result<(), Failure> {
    let mut first = None;
    for path in &args.files {
        let result = load_trajectories(path).and_then(|t| {
            let mut line = summary(&t);
            if let Some(k) = args.min_frames {
                let kept = prune_short_tracks(&t, k)?;
                line.push_str(&format!(" survive(min_frames={k})={}", kept.num_points()));
            }
            Ok(line)
        });
        match result {
            Ok(line) => println!("{}: ok {line}", path.display()),
            Err(e) => {
                let f = Failure::from(e);
                println!("{}: {f}", path.display());
                first.get_or_insert(f);
            }
        }
    }
    first.map_or(Ok(()), Err)
}
