//! Trajectory data model and its whitespace-separated text format.
//!
//! ```text
//! F N [M]
//! label x_1 y_1 x_2 y_2 ... x_F y_F      (one line per point)
//! ```
//!
//! Invisible frames are written as `nan nan`. A label of 0 means unknown;
//! a file carries ground truth only if every label is nonzero.
//!
//! Point indices in the API are 0-based; error messages name points by
//! their 1-based line order in the file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Tracked image points over a fixed number of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    num_frames: usize,
    /// Point-major, `num_frames` entries per point; `None` where invisible.
    positions: Vec<Option<[f64; 2]>>,
    /// Ground truth motion index per point, 0-based.
    labels: Option<Vec<usize>>,
}

impl TrajectorySet {
    /// Build and validate a set from per-point tracks.
    ///
    /// `labels`, when given, are 0-based motion indices.
    pub fn new(num_frames: usize, tracks: Vec<Vec<Option<[f64; 2]>>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if num_frames == 0 {
            return Err(Error::InvalidTrajectories("zero frames".into()));
        }
        if tracks.is_empty() {
            return Err(Error::InvalidTrajectories("zero points".into()));
        }
        let mut positions = Vec::with_capacity(tracks.len() * num_frames);
        for (i, track) in tracks.into_iter().enumerate() {
            if track.len() != num_frames {
                return Err(Error::InvalidPoint {
                    point: i + 1,
                    msg: format!("has {} frames, expected {num_frames}", track.len()),
                });
            }
            positions.extend(track);
        }
        let set = TrajectorySet {
            num_frames,
            positions,
            labels,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.num_points() {
            let mut seen = 0;
            for p in self.track(i).iter().flatten() {
                if !p[0].is_finite() || !p[1].is_finite() {
                    return Err(Error::InvalidPoint {
                        point: i + 1,
                        msg: "non-finite coordinate".into(),
                    });
                }
                seen += 1;
            }
            if seen < 2 {
                return Err(Error::InvalidPoint {
                    point: i + 1,
                    msg: format!("visible in {seen} frame(s), need at least 2"),
                });
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.num_points() {
                return Err(Error::InvalidTrajectories(format!(
                    "{} labels for {} points",
                    labels.len(),
                    self.num_points()
                )));
            }
            let m = labels.iter().max().map_or(0, |&l| l + 1);
            let mut counts = vec![0usize; m];
            for &l in labels {
                counts[l] += 1;
            }
            if let Some(empty) = counts.iter().position(|&c| c == 0) {
                return Err(Error::InvalidTrajectories(format!(
                    "motion {} has no points",
                    empty + 1
                )));
            }
        }
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_points(&self) -> usize {
        self.positions.len() / self.num_frames
    }

    pub fn track(&self, point: usize) -> &[Option<[f64; 2]>] {
        &self.positions[point * self.num_frames..(point + 1) * self.num_frames]
    }

    #[inline]
    pub fn position(&self, point: usize, frame: usize) -> Option<[f64; 2]> {
        self.positions[point * self.num_frames + frame]
    }

    #[inline]
    pub fn is_visible(&self, point: usize, frame: usize) -> bool {
        self.position(point, frame).is_some()
    }

    pub fn visible_count(&self, point: usize) -> usize {
        self.track(point).iter().filter(|p| p.is_some()).count()
    }

    /// Number of frames in which both points are visible.
    pub fn covisible_count(&self, i: usize, j: usize) -> usize {
        self.track(i)
            .iter()
            .zip(self.track(j))
            .filter(|(a, b)| a.is_some() && b.is_some())
            .count()
    }

    /// Points visible in both frames, in ascending order.
    pub fn covisible_points(&self, f1: usize, f2: usize) -> Vec<usize> {
        (0..self.num_points())
            .filter(|&i| self.is_visible(i, f1) && self.is_visible(i, f2))
            .collect()
    }

    /// Ground truth labels, 0-based.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of ground truth motions, if labelled.
    pub fn num_motions(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |&m| m + 1))
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    /// Keep only the given points, in the given order.
    pub fn subset(&self, points: &[usize]) -> Result<Self> {
        let tracks = points.iter().map(|&i| self.track(i).to_vec()).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| compact_labels(&points.iter().map(|&i| l[i]).collect::<Vec<_>>()));
        TrajectorySet::new(self.num_frames, tracks, labels)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|tok| {
                tok.parse().map_err(|_| Error::Parse {
                    line: hline,
                    msg: format!("bad header token `{tok}`"),
                })
            })
            .collect::<Result<_>>()?;
        if !(2..=3).contains(&head.len()) {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be `F N [M]`".into(),
            });
        }
        let (num_frames, num_points) = (head[0], head[1]);
        let declared_motions = head.get(2).copied();

        let mut tracks = Vec::with_capacity(num_points);
        let mut raw_labels = Vec::with_capacity(num_points);
        for (line, content) in lines.by_ref().take(num_points) {
            let toks: Vec<&str> = content.split_whitespace().collect();
            if toks.len() != 1 + 2 * num_frames {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, found {}", 1 + 2 * num_frames, toks.len()),
                });
            }
            let label: usize = toks[0].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad label `{}`", toks[0]),
            })?;
            raw_labels.push(label);
            let mut track = Vec::with_capacity(num_frames);
            for pair in toks[1..].chunks(2) {
                let x = parse_coord(pair[0], line)?;
                let y = parse_coord(pair[1], line)?;
                match (x.is_nan(), y.is_nan()) {
                    (true, true) => track.push(None),
                    (false, false) => track.push(Some([x, y])),
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: "only one coordinate of a frame is `nan`".into(),
                        })
                    }
                }
            }
            tracks.push(track);
        }
        if tracks.len() != num_points {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header declares {num_points} points, found {}", tracks.len()),
            });
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse {
                line,
                msg: "trailing content after last point".into(),
            });
        }

        let labels = if raw_labels.iter().all(|&l| l == 0) {
            None
        } else {
            if let Some(i) = raw_labels.iter().position(|&l| l == 0) {
                return Err(Error::InvalidPoint {
                    point: i + 1,
                    msg: "unknown label 0 in a labelled file".into(),
                });
            }
            if let Some(m) = declared_motions {
                if let Some(i) = raw_labels.iter().position(|&l| l > m) {
                    return Err(Error::InvalidPoint {
                        point: i + 1,
                        msg: format!("label {} exceeds motion count {m}", raw_labels[i]),
                    });
                }
            }
            Some(raw_labels.iter().map(|&l| l - 1).collect())
        };
        let set = TrajectorySet::new(num_frames, tracks, labels)?;
        if let (Some(m), Some(found)) = (declared_motions, set.num_motions()) {
            if m != found {
                return Err(Error::InvalidTrajectories(format!(
                    "header declares {m} motions, labels use {found}"
                )));
            }
        }
        Ok(set)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.num_motions() {
            Some(m) => writeln!(out, "{} {} {m}", self.num_frames, self.num_points()),
            None => writeln!(out, "{} {}", self.num_frames, self.num_points()),
        }
        .unwrap();
        for i in 0..self.num_points() {
            let label = self.labels.as_ref().map_or(0, |l| l[i] + 1);
            write!(out, "{label}").unwrap();
            for p in self.track(i) {
                match p {
                    Some([x, y]) => write!(out, " {} {}", format_sig9(*x), format_sig9(*y)),
                    None => write!(out, " nan nan"),
                }
                .unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    if tok.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad coordinate `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite coordinate `{tok}`"),
        });
    }
    Ok(v)
}

/// Renumber labels to 0..m in order of first appearance of each value's rank.
fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let mut used: Vec<usize> = labels.to_vec();
    used.sort_unstable();
    used.dedup();
    labels.iter().map(|l| used.binary_search(l).unwrap()).collect()
}

/// Shortest decimal form of `v` rounded to 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().unwrap();
    let a = rounded.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<TrajectorySet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrajectorySet::parse(&text)
}

pub fn save_trajectories(t: &TrajectorySet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, t.to_text()).map_err(|e| Error::io(path, e))
}

/// Drop points visible in fewer than `min_frames` frames.
pub fn prune_short_tracks(t: &TrajectorySet, min_frames: usize) -> Result<TrajectorySet> {
    if min_frames < 2 {
        return Err(Error::Config(format!("min_frames must be >= 2, got {min_frames}")));
    }
    let keep: Vec<usize> = (0..t.num_points())
        .filter(|&i| t.visible_count(i) >= min_frames)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyAfterPrune { min_frames });
    }
    if keep.len() == t.num_points() {
        return Ok(t.clone());
    }
    t.subset(&keep)
}
