//! Synthetic multi-body scenes, benchmark suites and the classification
//! error metric.
//!
//! Bodies are rigid point clouds with constant per-frame twist; the camera
//! is a pinhole with its own constant per-frame twist. Every generated
//! point records its body (the ground-truth motion) and its planar facet,
//! from which ideal per-model affinities can be read off.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, Rotation3, Vector3};
use pathfinding::prelude::{kuhn_munkres, Matrix as WeightMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};
use crate::spectral::Labeling;
use crate::trajectory::{format_sig9, save_trajectories, TrajectorySet};

/// Smallest admissible camera-frame depth.
pub const MIN_DEPTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Rectangle in the local XY plane.
    Plane { width: f64, height: f64 },
    /// Rectangle in the local XY plane with a fraction of the points pushed
    /// off-plane along the normal by up to `relief`.
    PlaneWithRelief {
        width: f64,
        height: f64,
        off_plane_fraction: f64,
        relief: f64,
    },
    /// Points on the surface of an axis-aligned box.
    Cuboid { size: [f64; 3] },
    /// Points inside a ball; no planar structure.
    Blob { radius: f64 },
}

/// Constant per-frame twist: after `f` frames the pose is
/// `(exp(f * rotation), f * translation)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidMotion {
    /// Axis-angle increment per frame, radians.
    pub rotation: [f64; 3],
    /// Translation per frame, world units.
    pub translation: [f64; 3],
}

impl RigidMotion {
    fn rotation_at(&self, frame: usize) -> Rotation3<f64> {
        Rotation3::from_scaled_axis(Vector3::from(self.rotation) * frame as f64)
    }

    fn translation_at(&self, frame: usize) -> Vector3<f64> {
        Vector3::from(self.translation) * frame as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodySpec {
    pub shape: Shape,
    pub num_points: usize,
    /// Initial world position of the body origin.
    pub center: [f64; 3],
    /// Initial orientation, axis-angle.
    pub orientation: [f64; 3],
    /// Motion about the body origin.
    pub motion: RigidMotion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraSpec {
    pub focal: f64,
    pub principal: [f64; 2],
    pub image_size: [f64; 2],
    /// Camera pose over time; at frame 0 the camera sits at the origin
    /// looking down +Z.
    pub motion: RigidMotion,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Occlusion {
    /// Probability that a track is cut to a random sub-window.
    pub dropout: f64,
    pub min_track_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub bodies: Vec<BodySpec>,
    pub camera: CameraSpec,
    pub num_frames: usize,
    pub noise_sigma: f64,
    pub occlusion: Occlusion,
}

/// A generated scene with its ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    /// Noisy, possibly occluded trajectories carrying body labels.
    pub trajectories: TrajectorySet,
    /// Noise-free projections with the same visibility.
    pub clean: TrajectorySet,
    /// Planar facet per point; unique per point for non-planar shapes.
    pub facets: Vec<usize>,
    /// Whether each facet's noise-free motion is an exact affine map
    /// between every frame pair.
    pub affine_facets: Vec<bool>,
}

/// Local point template and facet index (per shape) for each point.
fn sample_shape(shape: &Shape, count: usize, rng: &mut ChaCha8Rng) -> Vec<(Vector3<f64>, Option<usize>)> {
    let u = |rng: &mut ChaCha8Rng, half: f64| rng.random_range(-half..=half);
    (0..count)
        .map(|_| match *shape {
            Shape::Plane { width, height } => (Vector3::new(u(rng, width / 2.0), u(rng, height / 2.0), 0.0), Some(0)),
            Shape::PlaneWithRelief {
                width,
                height,
                off_plane_fraction,
                relief,
            } => {
                let p = Vector3::new(u(rng, width / 2.0), u(rng, height / 2.0), 0.0);
                if rng.random_bool(off_plane_fraction.clamp(0.0, 1.0)) {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let z = sign * relief * rng.random_range(0.25..=1.0);
                    (Vector3::new(p.x, p.y, z), None)
                } else {
                    (p, Some(0))
                }
            }
            Shape::Cuboid { size } => {
                let half = Vector3::from(size) / 2.0;
                let areas = [size[1] * size[2], size[0] * size[2], size[0] * size[1]];
                let total: f64 = areas.iter().sum::<f64>() * 2.0;
                let mut pick = rng.random_range(0.0..total);
                let mut face = 5;
                for f in 0..6 {
                    let a = areas[f / 2];
                    if pick < a {
                        face = f;
                        break;
                    }
                    pick -= a;
                }
                let axis = face / 2;
                let mut p = Vector3::new(u(rng, half.x), u(rng, half.y), u(rng, half.z));
                p[axis] = if face % 2 == 0 { -half[axis] } else { half[axis] };
                (p, Some(face))
            }
            Shape::Blob { radius } => loop {
                let p = Vector3::new(u(rng, radius), u(rng, radius), u(rng, radius));
                if p.norm() <= radius {
                    break (p, None);
                }
            },
        })
        .collect()
}

fn project(camera: &CameraSpec, x: &Vector3<f64>) -> [f64; 2] {
    [
        camera.focal * x.x / x.z + camera.principal[0],
        camera.focal * x.y / x.z + camera.principal[1],
    ]
}

/// Best least-squares affine map between two point lists; returns the
/// largest transfer error.
fn affine_misfit(src: &[[f64; 2]], dst: &[[f64; 2]]) -> f64 {
    let mut ata = Matrix3::zeros();
    let mut atx = Vector3::zeros();
    let mut aty = Vector3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let a = Vector3::new(s[0], s[1], 1.0);
        ata += a * a.transpose();
        atx += a * d[0];
        aty += a * d[1];
    }
    let Some(inv) = ata.try_inverse() else {
        return 0.0;
    };
    let (px, py) = (inv * atx, inv * aty);
    src.iter()
        .zip(dst)
        .map(|(s, d)| {
            let a = Vector3::new(s[0], s[1], 1.0);
            (px.dot(&a) - d[0]).hypot(py.dot(&a) - d[1])
        })
        .fold(0.0, f64::max)
}

/// Render a scene specification.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<Scene> {
    if spec.bodies.is_empty() {
        return Err(Error::InvalidScene("no bodies".into()));
    }
    if spec.num_frames < 2 {
        return Err(Error::InvalidScene("need at least 2 frames".into()));
    }
    if spec.occlusion.dropout > 0.0 && !(2..=spec.num_frames).contains(&spec.occlusion.min_track_len) {
        return Err(Error::InvalidScene("min_track_len must be in 2..=num_frames".into()));
    }
    let mut rng = rng_from_seed(seed);
    let cam = &spec.camera;
    let bound = 10.0 * cam.image_size[0].max(cam.image_size[1]);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|e| Error::InvalidScene(format!("noise: {e}")))?;

    let mut clean_tracks = Vec::new();
    let mut labels = Vec::new();
    let mut facets = Vec::new();
    let mut next_facet = 0;
    for (b, body) in spec.bodies.iter().enumerate() {
        let template = sample_shape(&body.shape, body.num_points, &mut rng);
        let base = Rotation3::from_scaled_axis(Vector3::from(body.orientation));
        let center = Vector3::from(body.center);
        let shape_facets = template.iter().filter_map(|(_, f)| *f).max().map_or(0, |m| m + 1);
        for (p, facet) in &template {
            let local = base * p;
            let mut track = Vec::with_capacity(spec.num_frames);
            for f in 0..spec.num_frames {
                let world = center + body.motion.translation_at(f) + body.motion.rotation_at(f) * local;
                let cam_rot = cam.motion.rotation_at(f);
                let x = cam_rot.inverse() * (world - cam.motion.translation_at(f));
                if x.z <= MIN_DEPTH {
                    return Err(Error::InvalidScene(format!(
                        "body {b} point at depth {:.3} in frame {f}",
                        x.z
                    )));
                }
                let uv = project(cam, &x);
                if !(uv[0].abs() < bound && uv[1].abs() < bound) {
                    return Err(Error::InvalidScene(format!(
                        "body {b} projects outside the image bound in frame {f}"
                    )));
                }
                track.push(uv);
            }
            clean_tracks.push(track);
            labels.push(b);
            facets.push(match facet {
                Some(k) => next_facet + k,
                None => usize::MAX,
            });
        }
        next_facet += shape_facets;
    }
    // points without a planar facet each get their own
    for f in facets.iter_mut() {
        if *f == usize::MAX {
            *f = next_facet;
            next_facet += 1;
        }
    }

    let frames = spec.num_frames;
    let mut noisy = Vec::with_capacity(clean_tracks.len());
    let mut clean = Vec::with_capacity(clean_tracks.len());
    for track in &clean_tracks {
        let (start, len) = if spec.occlusion.dropout > 0.0 && rng.random_bool(spec.occlusion.dropout.min(1.0)) {
            let len = rng.random_range(spec.occlusion.min_track_len..=frames);
            (rng.random_range(0..=frames - len), len)
        } else {
            (0, frames)
        };
        let visible = |f: usize| f >= start && f < start + len;
        clean.push((0..frames).map(|f| visible(f).then_some(track[f])).collect::<Vec<_>>());
        noisy.push(
            (0..frames)
                .map(|f| {
                    let [x, y] = track[f];
                    let p = [x + noise.sample(&mut rng), y + noise.sample(&mut rng)];
                    visible(f).then_some(p)
                })
                .collect::<Vec<_>>(),
        );
    }

    let mut affine_facets = vec![true; next_facet];
    for (facet, ok) in affine_facets.iter_mut().enumerate() {
        let members: Vec<usize> = (0..facets.len()).filter(|&i| facets[i] == facet).collect();
        if members.len() < 4 {
            // three or fewer points always admit an exact affine map
            continue;
        }
        'pairs: for f1 in 0..frames {
            for f2 in f1 + 1..frames {
                let src: Vec<[f64; 2]> = members.iter().map(|&i| clean_tracks[i][f1]).collect();
                let dst: Vec<[f64; 2]> = members.iter().map(|&i| clean_tracks[i][f2]).collect();
                if affine_misfit(&src, &dst) > 1e-6 {
                    *ok = false;
                    break 'pairs;
                }
            }
        }
    }

    Ok(Scene {
        trajectories: TrajectorySet::new(frames, noisy, Some(labels.clone()))?,
        clean: TrajectorySet::new(frames, clean, Some(labels))?,
        facets,
        affine_facets,
    })
}

/// Ideal binary affinities `[K_A, K_H, K_F]` from ground truth: same rigid
/// body for `K_F`, same planar facet for `K_H`, same affine-exact facet for
/// `K_A`. Diagonals are one.
pub fn ideal_affinities(scene: &Scene) -> [DMatrix<f64>; 3] {
    let labels = scene.trajectories.labels().expect("scenes are labelled");
    let n = labels.len();
    let facet = &scene.facets;
    let kf = DMatrix::from_fn(n, n, |i, j| f64::from(labels[i] == labels[j]));
    let kh = DMatrix::from_fn(n, n, |i, j| f64::from(i == j || facet[i] == facet[j]));
    let ka = DMatrix::from_fn(n, n, |i, j| {
        f64::from(i == j || (facet[i] == facet[j] && scene.affine_facets[facet[i]]))
    });
    [ka, kh, kf]
}

/// Fraction of misassigned points under the best matching between
/// predicted and true clusters.
pub fn classification_error(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::SizeMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let k = pred.iter().chain(truth).max().unwrap() + 1;
    let mut confusion = WeightMatrix::new(k, k, 0i64);
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[(p, t)] += 1;
    }
    let (matched, _) = kuhn_munkres(&confusion);
    Ok(1.0 - matched as f64 / pred.len() as f64)
}

pub fn labeling_error(pred: &Labeling, truth: &[usize]) -> Result<f64> {
    classification_error(&pred.labels, truth)
}

/// Error of assigning every point to the largest true group.
pub fn prevalence_error(truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let k = truth.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; k];
    truth.iter().for_each(|&t| counts[t] += 1);
    1.0 - *counts.iter().max().unwrap() as f64 / truth.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Archetype {
    /// Weak perspective, rotation-dominant camera, compact motions.
    HopkinsLike,
    /// Strong forward translation, deep scenes, elongated structures.
    KtLike,
    /// Dominant background plane plus an independent general motion.
    DegenerateMix,
    /// Object sliding along the background's epipolar lines.
    EpipolarAmbiguity,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::HopkinsLike,
        Archetype::KtLike,
        Archetype::DegenerateMix,
        Archetype::EpipolarAmbiguity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::HopkinsLike => "hopkins-like",
            Archetype::KtLike => "kt-like",
            Archetype::DegenerateMix => "degenerate-mix",
            Archetype::EpipolarAmbiguity => "epipolar-ambiguity",
        }
    }

    /// Archetypes on which the pipeline is expected to fail.
    pub fn expected_hard(self) -> bool {
        matches!(self, Archetype::EpipolarAmbiguity)
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownArchetype(s.to_string()))
    }
}

/// Sequences per generated suite.
pub const SUITE_SIZE: usize = 5;

#[derive(Debug, Clone)]
pub struct BenchmarkSequence {
    pub name: String,
    pub scene: Scene,
    pub num_motions: usize,
    pub archetype: Archetype,
    pub expected_hard: bool,
    /// Scene constants, as written to the manifest.
    pub description: String,
}

fn deg(d: f64) -> f64 {
    d.to_radians()
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn scaled(v: Vector3<f64>, s: f64) -> [f64; 3] {
    (v * s).into()
}

fn camera(focal: f64, motion: RigidMotion) -> CameraSpec {
    CameraSpec {
        focal,
        principal: [320.0, 240.0],
        image_size: [640.0, 480.0],
        motion,
    }
}

// Archetype constants. Depths and motion magnitudes are world units and
// radians per frame.

fn hopkins_like(rng: &mut ChaCha8Rng) -> (SceneSpec, usize) {
    let frames = rng.random_range(10..=30);
    let motions = rng.random_range(2..=3);
    let pan = Vector3::new(rng.random_range(-0.3..0.3), 1.0, rng.random_range(-0.2..0.2)).normalize();
    let cam_motion = RigidMotion {
        rotation: scaled(
            pan,
            deg(rng.random_range(0.2..0.4)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        ),
        translation: scaled(random_unit(rng), 0.02),
    };
    let mut bodies = vec![BodySpec {
        shape: Shape::Cuboid {
            size: [16.0, 12.0, 3.0],
        },
        num_points: 120,
        center: [0.0, 0.0, 34.0],
        orientation: [0.0, deg(rng.random_range(-15.0..15.0)), 0.0],
        motion: RigidMotion::default(),
    }];
    let slots = [[-4.0, -2.5], [4.0, 2.5], [-3.5, 3.0]];
    for slot in slots.iter().take(motions - 1) {
        let dir = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.2..0.2),
        )
        .normalize();
        bodies.push(BodySpec {
            shape: Shape::Cuboid {
                size: [
                    rng.random_range(2.5..3.5),
                    rng.random_range(2.5..3.5),
                    rng.random_range(1.5..2.5),
                ],
            },
            num_points: rng.random_range(40..=60),
            center: [slot[0], slot[1], rng.random_range(27.0..30.0)],
            orientation: scaled(random_unit(rng), deg(rng.random_range(0.0..30.0))),
            motion: RigidMotion {
                rotation: scaled(random_unit(rng), deg(rng.random_range(0.5..1.5))),
                translation: scaled(dir, rng.random_range(0.12..0.2)),
            },
        });
    }
    let spec = SceneSpec {
        bodies,
        camera: camera(1000.0, cam_motion),
        num_frames: frames,
        noise_sigma: 0.5,
        occlusion: Occlusion::default(),
    };
    (spec, motions)
}

fn kt_like(rng: &mut ChaCha8Rng) -> (SceneSpec, usize) {
    let frames = rng.random_range(10..=16);
    let speed = rng.random_range(0.8..1.2);
    let cam_motion = RigidMotion {
        rotation: [0.0, deg(rng.random_range(-0.3..0.3)), 0.0],
        translation: [0.0, 0.0, speed],
    };
    let wall = |x: f64, rng: &mut ChaCha8Rng| BodySpec {
        shape: Shape::Plane {
            width: 60.0,
            height: 6.0,
        },
        num_points: 60,
        center: [x, -1.0, rng.random_range(52.0..58.0)],
        orientation: [0.0, deg(90.0), 0.0],
        motion: RigidMotion::default(),
    };
    let mut bodies = vec![
        BodySpec {
            shape: Shape::Plane {
                width: 14.0,
                height: 60.0,
            },
            num_points: 60,
            center: [0.0, 2.0, 55.0],
            orientation: [deg(90.0), 0.0, 0.0],
            motion: RigidMotion::default(),
        },
        wall(-8.0, rng),
        wall(8.0, rng),
    ];
    // the three static bodies share one motion label
    for (k, x) in [-3.0, 3.5].into_iter().enumerate() {
        bodies.push(BodySpec {
            shape: Shape::Cuboid { size: [1.8, 1.5, 4.2] },
            num_points: rng.random_range(35..=50),
            center: [x, 0.8, rng.random_range(40.0..50.0)],
            orientation: [0.0, deg(rng.random_range(-5.0..5.0)), 0.0],
            motion: RigidMotion {
                rotation: [0.0, deg(rng.random_range(-0.5..0.5)), 0.0],
                translation: [
                    0.0,
                    0.0,
                    speed * rng.random_range(0.3..0.7) * if k == 0 { 1.0 } else { -0.5 },
                ],
            },
        });
    }
    let spec = SceneSpec {
        bodies,
        camera: camera(720.0, cam_motion),
        num_frames: frames,
        noise_sigma: 0.5,
        occlusion: Occlusion {
            dropout: 0.2,
            min_track_len: 5,
        },
    };
    (spec, 3)
}

fn degenerate_mix(rng: &mut ChaCha8Rng) -> (SceneSpec, usize) {
    let frames = rng.random_range(10..=20);
    let pan = Vector3::new(rng.random_range(-0.3..0.3), 1.0, 0.0).normalize();
    // near-pure rotation over a dominant plane: the background epipolar
    // geometry is a one-parameter family that also contains the
    // translating object's
    let cam_motion = RigidMotion {
        rotation: scaled(pan, deg(rng.random_range(0.3..0.5))),
        translation: scaled(random_unit(rng), rng.random_range(0.0..0.01)),
    };
    let bodies = vec![
        BodySpec {
            shape: Shape::PlaneWithRelief {
                width: 18.0,
                height: 13.0,
                off_plane_fraction: 0.08,
                relief: 1.0,
            },
            num_points: 140,
            center: [0.0, 0.0, 22.0],
            orientation: [
                deg(rng.random_range(-30.0..30.0)),
                deg(rng.random_range(-20.0..20.0)),
                0.0,
            ],
            motion: RigidMotion::default(),
        },
        BodySpec {
            shape: Shape::Cuboid { size: [3.0, 3.0, 3.0] },
            num_points: rng.random_range(25..=35),
            center: [
                rng.random_range(-3.0..3.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(15.0..17.0),
            ],
            orientation: scaled(random_unit(rng), deg(rng.random_range(10.0..40.0))),
            motion: RigidMotion {
                rotation: [0.0; 3],
                translation: scaled(random_unit(rng), rng.random_range(0.1..0.15)),
            },
        },
    ];
    let spec = SceneSpec {
        bodies,
        camera: camera(900.0, cam_motion),
        num_frames: frames,
        noise_sigma: 0.5,
        occlusion: Occlusion::default(),
    };
    (spec, 2)
}

fn epipolar_ambiguity(rng: &mut ChaCha8Rng) -> (SceneSpec, usize) {
    let frames = rng.random_range(10..=20);
    let cam_speed = rng.random_range(0.15..0.25);
    let bodies = vec![
        BodySpec {
            shape: Shape::Blob { radius: 7.0 },
            num_points: 120,
            center: [0.0, 0.0, 25.0],
            orientation: [0.0; 3],
            motion: RigidMotion::default(),
        },
        BodySpec {
            shape: Shape::Cuboid { size: [3.0, 2.0, 2.0] },
            num_points: 50,
            center: [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 20.0],
            orientation: scaled(random_unit(rng), deg(20.0)),
            // translation parallel to the camera's, so image motion stays on
            // the background's epipolar lines
            motion: RigidMotion {
                rotation: [0.0; 3],
                translation: [cam_speed * rng.random_range(1.5..2.5), 0.0, 0.0],
            },
        },
    ];
    let spec = SceneSpec {
        bodies,
        camera: camera(
            900.0,
            RigidMotion {
                rotation: [0.0; 3],
                translation: [cam_speed, 0.0, 0.0],
            },
        ),
        num_frames: frames,
        noise_sigma: 0.5,
        occlusion: Occlusion::default(),
    };
    (spec, 2)
}

/// Specification of one archetype instance.
pub fn archetype_scene(archetype: Archetype, seed: u64) -> (SceneSpec, usize) {
    let mut rng = rng_from_seed(derive_seed(seed, archetype.name(), 0));
    match archetype {
        Archetype::HopkinsLike => hopkins_like(&mut rng),
        Archetype::KtLike => kt_like(&mut rng),
        Archetype::DegenerateMix => degenerate_mix(&mut rng),
        Archetype::EpipolarAmbiguity => epipolar_ambiguity(&mut rng),
    }
}

/// Ground-truth labels when several bodies share one rigid motion.
fn merge_static_bodies(scene: &mut Scene, spec: &SceneSpec) -> Result<()> {
    let motion_of: Vec<usize> = {
        let mut ids: Vec<RigidMotion> = Vec::new();
        spec.bodies
            .iter()
            .map(|b| match ids.iter().position(|m| *m == b.motion) {
                Some(k) => k,
                None => {
                    ids.push(b.motion);
                    ids.len() - 1
                }
            })
            .collect()
    };
    let labels: Vec<usize> = scene
        .trajectories
        .labels()
        .unwrap()
        .iter()
        .map(|&b| motion_of[b])
        .collect();
    scene.trajectories = scene.trajectories.clone().with_labels(Some(labels.clone()))?;
    scene.clean = scene.clean.clone().with_labels(Some(labels))?;
    Ok(())
}

/// A fixed list of sequences for one archetype.
pub fn make_benchmark_suite(archetype: Archetype, seed: u64) -> Result<Vec<BenchmarkSequence>> {
    (0..SUITE_SIZE)
        .map(|k| {
            let item_seed = derive_seed(seed, "suite", k as u64);
            let (spec, motions) = archetype_scene(archetype, item_seed);
            let mut scene = generate_scene(&spec, derive_seed(item_seed, "render", 0))?;
            merge_static_bodies(&mut scene, &spec)?;
            Ok(BenchmarkSequence {
                name: format!("{}-{:02}", archetype.name(), k + 1),
                num_motions: motions,
                scene,
                archetype,
                expected_hard: archetype.expected_hard(),
                description: describe_scene(&spec),
            })
        })
        .collect()
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub num_motions: usize,
    pub archetype: String,
    pub expected_hard: bool,
}

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Write each sequence's trajectories and a plain-text index into `dir`.
pub fn write_suite(dir: impl AsRef<Path>, suite: &[BenchmarkSequence]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("# name path motions archetype expected_hard\n");
    for seq in suite {
        let file = format!("{}.traj.txt", seq.name);
        manifest.push_str(&format!("# {}: {}\n", seq.name, seq.description));
        save_trajectories(&seq.scene.trajectories, dir.join(&file))?;
        manifest.push_str(&format!(
            "{} {} {} {} {}\n",
            seq.name, file, seq.num_motions, seq.archetype, seq.expected_hard
        ));
    }
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Read a manifest; relative paths resolve against its directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse {
            line: n + 1,
            msg: msg.to_string(),
        };
        if toks.len() != 5 {
            return Err(bad("expected `name path motions archetype expected_hard`"));
        }
        let p = PathBuf::from(toks[1]);
        out.push(ManifestEntry {
            name: toks[0].to_string(),
            path: if p.is_absolute() { p } else { base.join(p) },
            num_motions: toks[2].parse().map_err(|_| bad("bad motion count"))?,
            archetype: toks[3].to_string(),
            expected_hard: toks[4].parse().map_err(|_| bad("bad expected_hard flag"))?,
        });
    }
    Ok(out)
}

/// Human-readable summary of an archetype's fixed constants.
pub fn describe_scene(spec: &SceneSpec) -> String {
    let norm = |v: [f64; 3]| format_sig9(Vector3::from(v).norm());
    let cam = &spec.camera.motion;
    let mut s = format!(
        "frames={} focal={} noise={} camera_rot={} camera_trans={} dropout={}",
        spec.num_frames,
        format_sig9(spec.camera.focal),
        format_sig9(spec.noise_sigma),
        norm(cam.rotation),
        norm(cam.translation),
        format_sig9(spec.occlusion.dropout),
    );
    for b in &spec.bodies {
        let shape = match b.shape {
            Shape::Plane { .. } => "plane",
            Shape::PlaneWithRelief { .. } => "relief-plane",
            Shape::Cuboid { .. } => "cuboid",
            Shape::Blob { .. } => "blob",
        };
        s.push_str(&format!(
            " | {shape} n={} z={} rot={} trans={}",
            b.num_points,
            format_sig9(b.center[2]),
            norm(b.motion.rotation),
            norm(b.motion.translation)
        ));
    }
    s
}
