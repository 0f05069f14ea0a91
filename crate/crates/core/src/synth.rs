//! Seeded synthetic micrograph-like images and labelled corpora.
//!
//! Two pattern families are available. `Ripples` are dark oriented stripes
//! (walls) separated by bright gaps, optionally cross-linked by dark bridges.
//! `Holes` are bright elliptical pores packed into a dark matrix. Walls are
//! always dark so that the default preprocessing (binarize, then invert)
//! makes them foreground.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::manifest::{CorpusManifest, ManifestEntry, Structure};

pub const WALL_LEVEL: u8 = 40;
pub const GAP_LEVEL: u8 = 210;
/// Stripe period in pixels at coarseness 1.
pub const BASE_WAVELENGTH: f64 = 8.0;
/// Pore radius in pixels at coarseness 1.
pub const BASE_PORE_RADIUS: f64 = 4.0;
pub const MIN_SIDE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Ripples,
    Holes,
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternKind::Ripples => "ripples",
            PatternKind::Holes => "holes",
        })
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ripples" => Ok(PatternKind::Ripples),
            "holes" => Ok(PatternKind::Holes),
            _ => Err(Error::Invalid(format!("unknown pattern kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: PatternKind,
    /// Stripe direction (ripples) or pore elongation axis (holes), degrees.
    pub angle_deg: f64,
    /// Scales the stripe period or pore radius.
    pub coarseness: f64,
    /// Standard deviation of the noise added to the pattern field.
    pub noise_sigma: f64,
    /// Ripples only: expected bridges between neighbouring stripes per
    /// wavelength of stripe length. Zero gives plain stripes.
    pub branching: f64,
    pub seed: u64,
    /// `(height, width)`.
    pub dims: (usize, usize),
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims.0 < MIN_SIDE || self.dims.1 < MIN_SIDE {
            return Err(Error::Parameter {
                name: "dims",
                reason: format!("must be at least {MIN_SIDE}x{MIN_SIDE}, got {:?}", self.dims),
            });
        }
        if !(self.coarseness > 0.0 && self.coarseness.is_finite()) {
            return Err(Error::Parameter {
                name: "coarseness",
                reason: format!("must be positive, got {}", self.coarseness),
            });
        }
        if !(0.0..).contains(&self.noise_sigma) || !(0.0..).contains(&self.branching) || !self.angle_deg.is_finite() {
            return Err(Error::Parameter {
                name: "noise_sigma/branching/angle_deg",
                reason: "noise and branching must be non-negative, angle finite".into(),
            });
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; used to derive per-cell jitter and per-image seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_hash(seed: u64, a: i64, b: i64) -> f64 {
    let h = mix64(seed ^ mix64(a as u64 ^ mix64(b as u64)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

pub fn generate(spec: &SynthSpec) -> Result<GrayImage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let field = match spec.kind {
        PatternKind::Ripples => ripple_field(spec, &mut rng),
        PatternKind::Holes => pore_field(spec, &mut rng),
    };
    let (h, w) = spec.dims;
    let data = field
        .into_iter()
        .map(|f| {
            let noisy = if spec.noise_sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                f + spec.noise_sigma * z
            } else {
                f
            };
            if noisy < 0.0 {
                WALL_LEVEL
            } else {
                GAP_LEVEL
            }
        })
        .collect();
    GrayImage::new(w, h, data)
}

/// Rotated frame: `u` runs across the stripes, `v` along them.
fn rotated(spec: &SynthSpec, row: usize, col: usize) -> (f64, f64) {
    let (h, w) = spec.dims;
    let theta = spec.angle_deg.to_radians();
    let x = col as f64 - w as f64 / 2.0;
    let y = h as f64 / 2.0 - row as f64;
    // Stripes run along the direction at `angle_deg` from the x axis.
    let v = x * theta.cos() + y * theta.sin();
    let u = -x * theta.sin() + y * theta.cos();
    (u, v)
}

fn ripple_field(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (h, w) = spec.dims;
    let wavelength = BASE_WAVELENGTH * spec.coarseness;
    let phase: f64 = rng.random::<f64>();
    let bridge_seed: u64 = rng.random();
    let spacing = if spec.branching > 0.0 {
        wavelength / spec.branching
    } else {
        f64::INFINITY
    };
    let half_width = wavelength / 8.0;

    let mut out = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            let (u, v) = rotated(spec, row, col);
            let t = u / wavelength + phase;
            let mut f = (2.0 * PI * t).cos();
            if f > 0.0 && spacing.is_finite() {
                // Bright band k is centred on t = k; bridges sit at jittered
                // positions along it.
                let band = t.round() as i64;
                let cell = (v / spacing).floor() as i64;
                let on_bridge = (cell - 1..=cell + 1).any(|j| {
                    let jitter = unit_hash(bridge_seed, band, j) - 0.5;
                    let centre = (j as f64 + 0.5 + 0.8 * jitter) * spacing;
                    (v - centre).abs() < half_width
                });
                if on_bridge {
                    f = -1.0;
                }
            }
            out.push(f);
        }
    }
    out
}

fn pore_field(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (h, w) = spec.dims;
    let radius = BASE_PORE_RADIUS * spec.coarseness;
    let elongation = 1.0 + spec.angle_deg.abs().min(90.0) / 45.0;
    let (major, minor) = (radius * elongation.sqrt(), radius / elongation.sqrt());
    let gap = radius.max(2.0);
    let min_dist = 2.0 * major + gap;
    let theta = spec.angle_deg.to_radians();

    let target = ((h * w) as f64 / (min_dist * min_dist)).ceil() as usize * 2;
    let mut centres: Vec<(f64, f64)> = Vec::new();
    for _ in 0..target * 30 {
        if centres.len() >= target {
            break;
        }
        let c = (rng.random::<f64>() * h as f64, rng.random::<f64>() * w as f64);
        if centres
            .iter()
            .all(|p| (p.0 - c.0).powi(2) + (p.1 - c.1).powi(2) >= min_dist * min_dist)
        {
            centres.push(c);
        }
    }

    let mut out = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            let (y, x) = (row as f64, col as f64);
            let best = centres
                .iter()
                .map(|&(cy, cx)| {
                    let (dx, dy) = (x - cx, cy - y);
                    let along = dx * theta.cos() + dy * theta.sin();
                    let across = -dx * theta.sin() + dy * theta.cos();
                    1.0 - (along / major).powi(2) - (across / minor).powi(2)
                })
                .fold(-1.0f64, f64::max);
            out.push(best.max(-1.0));
        }
    }
    out
}

/// A 3×3 (at most) condition grid. Fluence classes map to coarseness values,
/// angle classes to angles and branching levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusGrid {
    pub kind: PatternKind,
    pub coarseness: Vec<f64>,
    pub angles_deg: Vec<f64>,
    /// Per angle class. Varying it makes the angle axis the one that changes
    /// skeleton topology; a constant list leaves only orientation.
    pub branching: Vec<f64>,
    pub replicates: usize,
    pub noise_sigma: f64,
    pub dims: (usize, usize),
    pub seed: u64,
}

impl Default for CorpusGrid {
    fn default() -> Self {
        Self {
            kind: PatternKind::Ripples,
            coarseness: vec![1.0, 1.25, 1.5],
            angles_deg: vec![0.0, 30.0, 45.0],
            branching: vec![1.0, 0.5, 0.0],
            replicates: 5,
            noise_sigma: 0.3,
            dims: (128, 128),
            seed: 7,
        }
    }
}

impl CorpusGrid {
    pub fn validate(&self) -> Result<()> {
        if self.coarseness.len() > 3 || self.angles_deg.len() > 3 {
            return Err(Error::Parameter {
                name: "grid",
                reason: "at most three fluence and three angle classes".into(),
            });
        }
        if self.branching.len() != self.angles_deg.len() {
            return Err(Error::Parameter {
                name: "branching",
                reason: "needs one value per angle class".into(),
            });
        }
        Ok(())
    }

    /// Image specs with their labels, in manifest order.
    pub fn specs(&self) -> Vec<(ManifestEntry, SynthSpec)> {
        let mut out = Vec::new();
        for (fi, &coarseness) in self.coarseness.iter().enumerate() {
            for (ai, &angle) in self.angles_deg.iter().enumerate() {
                for r in 0..self.replicates {
                    let image_id = format!("f{}_a{}_r{:02}", fi + 1, ai + 1, r);
                    let index = ((fi * 3 + ai) * self.replicates + r) as u64;
                    let spec = SynthSpec {
                        kind: self.kind,
                        angle_deg: angle,
                        coarseness,
                        noise_sigma: self.noise_sigma,
                        branching: self.branching[ai],
                        seed: mix64(self.seed ^ mix64(index)),
                        dims: self.dims,
                    };
                    let entry = ManifestEntry {
                        path: format!("{image_id}.pgm").into(),
                        image_id,
                        fluence_class: fi as u8 + 1,
                        angle_class: ai as u8 + 1,
                        structure: Structure::Wall,
                    };
                    out.push((entry, spec));
                }
            }
        }
        out
    }
}

/// Renders every grid cell and replicate into `out_dir` and writes
/// `manifest.csv` next to the images.
pub fn generate_corpus(grid: &CorpusGrid, out_dir: &Path) -> Result<CorpusManifest> {
    grid.validate()?;
    let specs = grid.specs();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    specs.par_iter().try_for_each(|(entry, spec)| {
        generate(spec)?.save_pgm(&out_dir.join(&entry.path))
    })?;
    let manifest = CorpusManifest::new(specs.into_iter().map(|(e, _)| e).collect(), out_dir)?;
    if !manifest.entries.is_empty() {
        manifest.save(&out_dir.join("manifest.csv"))?;
    }
    Ok(manifest)
}
