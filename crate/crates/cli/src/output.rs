use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use moseg::synth::{read_manifest, MANIFEST_NAME};
use moseg::{Error, Result};

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// One sequence to process.
#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    pub path: PathBuf,
    /// Motion count from a manifest, if any.
    pub motions: Option<usize>,
}

fn is_manifest(path: &Path) -> bool {
    path.file_name().and_then(|n| n.to_str()) == Some(MANIFEST_NAME)
        || path.extension().and_then(|e| e.to_str()) == Some("manifest")
}

/// Sequence name from a file name: `seq.traj.txt` and `seq.txt` give `seq`.
fn sequence_name(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("sequence");
    for suffix in [".traj.txt", ".txt"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            if !stem.is_empty() {
                return stem.to_string();
            }
        }
    }
    name.to_string()
}

/// Expand inputs into jobs; manifests contribute one job per entry.
pub fn collect_jobs(inputs: &[PathBuf]) -> Result<Vec<Job>> {
    let mut jobs = Vec::new();
    for input in inputs {
        if is_manifest(input) {
            for e in read_manifest(input)? {
                jobs.push(Job {
                    name: e.name,
                    path: e.path,
                    motions: Some(e.num_motions),
                });
            }
        } else {
            jobs.push(Job {
                name: sequence_name(input),
                path: input.clone(),
                motions: None,
            });
        }
    }
    let mut names: Vec<&str> = jobs.iter().map(|j| j.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("two inputs map to the sequence name `{}`", w[0])));
    }
    Ok(jobs)
}

/// Labels as 1-based integers, one per line.
pub fn labels_text(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{}\n", l + 1)).collect()
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn fmt_error(e: Option<f64>) -> String {
    e.map_or_else(String::new, |e| format!("{e:.6}"))
}
