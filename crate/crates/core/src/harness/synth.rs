//! Seeded synthetic iris-like images with known rotation and scale.
//!
//! Each subject gets a texture defined in normalized polar coordinates
//! (iris radius 1): a dark pupil disc, radial and angular sinusoids and a
//! field of random Gaussian spots, blended smoothly into the annulus. An
//! instance renders that texture rotated by `alpha` about the center and
//! at radius `s * r`, so ground truth is exact by construction.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{IrisImage, Raster, MIN_RADIUS};

use super::manifest::{DatasetManifest, GroundTruth, ImpostorPolicy, Protocol, Sample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Spot {
    x: f64,
    y: f64,
    width: f64,
    amplitude: f64,
}

/// Analytic texture of one synthetic subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectTexture {
    pupil_radius: f64,
    radial_freq: f64,
    radial_phase: f64,
    angular_freq: f64,
    angular_phase: f64,
    spots: Vec<Spot>,
}

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

const PUPIL_LEVEL: f64 = 0.08;
const SCLERA_LEVEL: f64 = 0.8;
const BLEND: f64 = 0.03;

impl SubjectTexture {
    pub fn random(rng: &mut impl Rng) -> Self {
        let pupil_radius = rng.random_range(0.25..0.35);
        let count = rng.random_range(70..90);
        let spots = (0..count)
            .map(|_| {
                let rho = rng.random_range(pupil_radius + 0.06..0.94);
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let magnitude = rng.random_range(0.15..0.35);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Spot {
                    x: rho * theta.cos(),
                    y: rho * theta.sin(),
                    width: rng.random_range(0.022..0.05),
                    amplitude: sign * magnitude,
                }
            })
            .collect();
        Self {
            pupil_radius,
            radial_freq: rng.random_range(3.0..6.0),
            radial_phase: rng.random_range(0.0..std::f64::consts::TAU),
            angular_freq: f64::from(rng.random_range(5u32..12)),
            angular_phase: rng.random_range(0.0..std::f64::consts::TAU),
            spots,
        }
    }

    /// Intensity at normalized coordinates (iris radius 1, center at origin).
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let rho = x.hypot(y);
        let theta = y.atan2(x);
        let mut iris = 0.45
            + 0.06 * (std::f64::consts::TAU * self.radial_freq * rho + self.radial_phase).cos()
            + 0.05 * (self.angular_freq * theta + self.angular_phase).cos();
        for s in &self.spots {
            let d2 = (x - s.x).powi(2) + (y - s.y).powi(2);
            let w2 = s.width * s.width;
            if d2 < 25.0 * w2 {
                iris += s.amplitude * (-d2 / (2.0 * w2)).exp();
            }
        }
        let inside_pupil = 1.0 - smoothstep(self.pupil_radius - BLEND, self.pupil_radius + BLEND, rho);
        let outside_iris = smoothstep(1.0 - BLEND, 1.0 + BLEND, rho);
        let v = inside_pupil * PUPIL_LEVEL
            + outside_iris * SCLERA_LEVEL
            + (1.0 - inside_pupil - outside_iris).max(0.0) * iris;
        v.clamp(0.0, 1.0)
    }

    /// Renders a `2r x 2r` raster of the texture rotated by `rotation_deg`.
    pub fn render(&self, radius: u32, rotation_deg: f64) -> Raster {
        let side = 2 * radius as usize;
        let r = f64::from(radius);
        let (sin, cos) = rotation_deg.to_radians().sin_cos();
        Raster::from_fn(side, side, |col, row| {
            let px = (col as f64 + 0.5 - r) / r;
            let py = (row as f64 + 0.5 - r) / r;
            // undo the rotation to find the texture coordinate
            self.value(cos * px + sin * py, -sin * px + cos * py)
        })
    }

    /// Renders and, when `noise_sigma > 0`, adds seeded Gaussian pixel noise.
    pub fn render_instance(
        &self,
        radius: u32,
        rotation_deg: f64,
        noise_sigma: f64,
        noise_seed: u64,
        id: impl Into<String>,
    ) -> Result<IrisImage> {
        let mut raster = self.render(radius, rotation_deg);
        if noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            let normal = Normal::new(0.0, noise_sigma)
                .map_err(|e| Error::InvalidConfig(format!("noise sigma: {e}")))?;
            let noisy: Vec<f64> = raster
                .data()
                .iter()
                .map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            raster = Raster::new(raster.width(), raster.height(), noisy);
        }
        IrisImage::new(raster, radius, id)
    }
}

/// Maps a point of one instance to the corresponding point of another,
/// given both instances' ground truth and radii.
pub fn map_point(
    point: (f64, f64),
    from: (GroundTruth, u32),
    to: (GroundTruth, u32),
) -> (f64, f64) {
    let (rf, rt) = (f64::from(from.1), f64::from(to.1));
    let (dx, dy) = ((point.0 - rf) / rf, (point.1 - rf) / rf);
    let (s, c) = (-from.0.rotation_deg).to_radians().sin_cos();
    let (bx, by) = (c * dx - s * dy, s * dx + c * dy);
    let (s, c) = to.0.rotation_deg.to_radians().sin_cos();
    (rt + rt * (c * bx - s * by), rt + rt * (s * bx + c * by))
}

/// Parameter ranges for synthetic instances. Instance 0 of every subject is
/// always the untransformed texture at `base_radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformSpec {
    /// Rotation range in degrees, `[lo, hi)`.
    pub rotation_deg: (f64, f64),
    /// Scale range, `[lo, hi)`; the realized scale is `round(s * r) / r`.
    pub scale: (f64, f64),
    pub base_radius: u32,
    /// Standard deviation of additive pixel noise on every instance but 0.
    pub noise_sigma: f64,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            rotation_deg: (0.0, 360.0),
            scale: (0.8, 1.2),
            base_radius: 64,
            noise_sigma: 0.0,
        }
    }
}

/// One rendered synthetic instance.
#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub subject: usize,
    pub instance: usize,
    pub ground_truth: GroundTruth,
    pub image: IrisImage,
}

/// Seeded generator shared by [`generate_synthetic`] and in-memory tests.
pub struct SyntheticGenerator {
    seed: u64,
    spec: TransformSpec,
}

impl SyntheticGenerator {
    pub fn new(seed: u64, spec: TransformSpec) -> Result<Self> {
        let (r0, r1) = spec.rotation_deg;
        let (s0, s1) = spec.scale;
        if !(r0 <= r1 && s0 > 0.0 && s0 <= s1) {
            return Err(Error::InvalidConfig("empty transform range".into()));
        }
        let smallest = (s0 * f64::from(spec.base_radius)).round();
        if smallest < f64::from(MIN_RADIUS) {
            return Err(Error::InvalidConfig(format!(
                "scaled radius {smallest} below {MIN_RADIUS}"
            )));
        }
        Ok(Self { seed, spec })
    }

    /// Texture and transform draws use separate streams so neither shifts
    /// the other.
    fn subject_rng(&self, subject: usize, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed ^ (subject as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        rng.set_stream(stream);
        rng
    }

    pub fn texture(&self, subject: usize) -> SubjectTexture {
        SubjectTexture::random(&mut self.subject_rng(subject, 2))
    }

    /// Ground truth and radius of each instance of a subject.
    pub fn transforms(&self, subject: usize, instances: usize) -> Vec<(GroundTruth, u32)> {
        let mut rng = self.subject_rng(subject, 3);
        let base = self.spec.base_radius;
        (0..instances)
            .map(|k| {
                if k == 0 {
                    return (
                        GroundTruth {
                            rotation_deg: 0.0,
                            scale: 1.0,
                        },
                        base,
                    );
                }
                let (r0, r1) = self.spec.rotation_deg;
                let (s0, s1) = self.spec.scale;
                let rotation = if r1 > r0 { rng.random_range(r0..r1) } else { r0 };
                let s = if s1 > s0 { rng.random_range(s0..s1) } else { s0 };
                let radius = (s * f64::from(base)).round() as u32;
                (
                    GroundTruth {
                        rotation_deg: rotation,
                        scale: f64::from(radius) / f64::from(base),
                    },
                    radius,
                )
            })
            .collect()
    }

    pub fn instance(
        &self,
        subject: usize,
        instance: usize,
        texture: &SubjectTexture,
        transform: (GroundTruth, u32),
    ) -> Result<SyntheticInstance> {
        let noise = if instance == 0 { 0.0 } else { self.spec.noise_sigma };
        let noise_seed = self.seed.wrapping_add(((subject as u64) << 20) | instance as u64);
        let image = texture.render_instance(
            transform.1,
            transform.0.rotation_deg,
            noise,
            noise_seed,
            sample_name(subject, instance),
        )?;
        Ok(SyntheticInstance {
            subject,
            instance,
            ground_truth: transform.0,
            image,
        })
    }

    pub fn subject_instances(&self, subject: usize, instances: usize) -> Result<Vec<SyntheticInstance>> {
        let texture = self.texture(subject);
        self.transforms(subject, instances)
            .into_iter()
            .enumerate()
            .map(|(k, t)| self.instance(subject, k, &texture, t))
            .collect()
    }
}

fn sample_name(subject: usize, instance: usize) -> String {
    format!("s{subject:03}_i{instance:02}")
}

/// Writes `subjects * instances` PNGs and `manifest.json` into `out_dir`.
pub fn generate_synthetic(
    out_dir: &Path,
    seed: u64,
    subjects: usize,
    instances: usize,
    spec: &TransformSpec,
) -> Result<DatasetManifest> {
    if subjects == 0 || instances == 0 {
        return Err(Error::InvalidConfig(
            "need at least one subject and one instance".into(),
        ));
    }
    let generator = SyntheticGenerator::new(seed, spec.clone())?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut samples = Vec::with_capacity(subjects * instances);
    for subject in 0..subjects {
        for inst in generator.subject_instances(subject, instances)? {
            let file = format!("{}.png", sample_name(subject, inst.instance));
            inst.image.raster().save(&out_dir.join(&file))?;
            samples.push(Sample {
                subject_id: format!("s{subject:03}"),
                instance_id: format!("i{:02}", inst.instance),
                path: file.into(),
                radius: inst.image.radius(),
                ground_truth: Some(inst.ground_truth),
            });
        }
    }
    let manifest = DatasetManifest {
        root: ".".into(),
        samples,
        protocol: Protocol {
            impostor: ImpostorPolicy::OnePerOtherSubject { seed },
            ..Protocol::default()
        },
    };
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(DatasetManifest {
        root: out_dir.to_path_buf(),
        ..manifest
    })
}
