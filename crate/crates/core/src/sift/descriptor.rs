use crate::keypoint::{Keypoint, DESCRIPTOR_LEN};

use super::orientation::{angle_deg, gradient, KeypointStub};
use super::scale_space::ScaleSpace;

const GRID: usize = 4;
const ORI_BINS: usize = 8;
/// Cell width in units of the keypoint's octave sigma.
const CELL_SCALE: f64 = 3.0;
const CLAMP: f64 = 0.2;

/// Builds the 4x4x8 gradient descriptor in a window rotated to the stub's
/// orientation. Returns `None` when the window leaves the raster or the
/// patch is flat.
pub fn compute_descriptor(space: &ScaleSpace, stub: &KeypointStub) -> Option<Keypoint> {
    let img = &space.octaves[stub.octave].gaussians[stub.gaussian_layer];
    let cell = CELL_SCALE * stub.octave_sigma;
    let radius = (cell * std::f64::consts::SQRT_2 * (GRID as f64 + 1.0) * 0.5).round() as isize;
    let ci = stub.octave_x.round() as isize;
    let ri = stub.octave_y.round() as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    if ci - radius < 1 || ri - radius < 1 || ci + radius > w - 2 || ri + radius > h - 2 {
        return None;
    }

    let (sin_t, cos_t) = stub.orientation.to_radians().sin_cos();
    let half = GRID as f64 / 2.0;
    let weight_denom = 2.0 * half * half;
    // padded by one cell and one orientation bin on each side for interpolation
    let (gp, op) = (GRID + 2, ORI_BINS + 2);
    let mut hist = vec![0.0f64; gp * gp * op];

    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let col = (ci + dx) as usize;
            let row = (ri + dy) as usize;
            let ox = col as f64 - stub.octave_x;
            let oy = row as f64 - stub.octave_y;
            let u = (ox * cos_t + oy * sin_t) / cell;
            let v = (-ox * sin_t + oy * cos_t) / cell;
            let cbin = u + half - 0.5;
            let rbin = v + half - 0.5;
            if !(cbin > -1.0 && cbin < GRID as f64 && rbin > -1.0 && rbin < GRID as f64) {
                continue;
            }
            let (gx, gy) = gradient(img, col, row);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let rel = (angle_deg(gx, gy) - stub.orientation).rem_euclid(360.0);
            let obin = rel * ORI_BINS as f64 / 360.0;
            let weighted = mag * (-(u * u + v * v) / weight_denom).exp();

            let (r0, c0, o0) = (rbin.floor(), cbin.floor(), obin.floor());
            let (fr, fc, fo) = (rbin - r0, cbin - c0, obin - o0);
            let (r0, c0) = ((r0 + 1.0) as usize, (c0 + 1.0) as usize);
            let o0 = o0 as usize % ORI_BINS;
            for (ri_, wr) in [(r0, 1.0 - fr), (r0 + 1, fr)] {
                for (ci_, wc) in [(c0, 1.0 - fc), (c0 + 1, fc)] {
                    for (oi, wo) in [(o0, 1.0 - fo), (o0 + 1, fo)] {
                        hist[(ri_ * gp + ci_) * op + oi] += weighted * wr * wc * wo;
                    }
                }
            }
        }
    }

    let mut desc = vec![0.0f64; DESCRIPTOR_LEN];
    for r in 0..GRID {
        for c in 0..GRID {
            let base = ((r + 1) * gp + c + 1) * op;
            for o in 0..ORI_BINS {
                let mut v = hist[base + o];
                if o == 0 {
                    v += hist[base + ORI_BINS];
                }
                if o == 1 {
                    v += hist[base + ORI_BINS + 1];
                }
                desc[(r * GRID + c) * ORI_BINS + o] = v;
            }
        }
    }

    let norm = l2(&desc);
    if norm <= 1e-12 {
        return None;
    }
    desc.iter_mut().for_each(|v| *v = (*v / norm).min(CLAMP));
    let norm = l2(&desc);
    if norm <= 1e-12 {
        return None;
    }
    Some(Keypoint {
        x: stub.x,
        y: stub.y,
        sigma: stub.sigma,
        orientation: stub.orientation,
        descriptor: desc.iter().map(|v| (v / norm) as f32).collect(),
    })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{IrisImage, Raster};
    use crate::sift::scale_space::build_scale_space;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Blobs = Vec<(f64, f64, f64, f64)>;

    fn random_blobs(rng: &mut ChaCha8Rng) -> Blobs {
        (0..12)
            .map(|_| {
                (
                    rng.random_range(-14.0..14.0),
                    rng.random_range(-14.0..14.0),
                    rng.random_range(1.5..4.0),
                    rng.random_range(-0.4..0.4),
                )
            })
            .collect()
    }

    fn render(blobs: &Blobs, alpha_deg: f64) -> IrisImage {
        let (s, c) = alpha_deg.to_radians().sin_cos();
        let raster = Raster::from_fn(96, 96, |col, row| {
            let px = col as f64 + 0.5 - 48.0;
            let py = row as f64 + 0.5 - 48.0;
            let (x, y) = (c * px + s * py, -s * px + c * py);
            let v: f64 = blobs
                .iter()
                .map(|(bx, by, rho, a)| {
                    a * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * rho * rho)).exp()
                })
                .sum();
            (0.5 + v).clamp(0.0, 1.0)
        });
        IrisImage::new(raster, 48, "p").unwrap()
    }

    fn stub(orientation: f64) -> KeypointStub {
        KeypointStub {
            x: 48.0,
            y: 48.0,
            sigma: 3.2,
            orientation,
            octave: 0,
            gaussian_layer: 3,
            octave_x: 47.5,
            octave_y: 47.5,
            octave_sigma: 3.2,
        }
    }

    fn describe(img: &IrisImage, orientation: f64) -> Keypoint {
        let space = build_scale_space(img, 1, 3, 1.6).unwrap();
        compute_descriptor(&space, &stub(orientation)).unwrap()
    }

    #[test]
    fn descriptor_is_unit_length_and_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let kp = describe(&render(&random_blobs(&mut rng), 0.0), 20.0);
        assert_eq!(kp.descriptor.len(), 128);
        assert!((kp.descriptor_norm() - 1.0).abs() < 1e-6);
        assert!(kp.descriptor.iter().all(|&v| v >= 0.0));
        // after clamping at 0.2 and renormalizing, no entry can exceed 0.2 / (norm after clamp)
        assert!(kp.descriptor.iter().all(|&v| v < 0.5));
    }

    #[test]
    fn descriptor_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = render(&random_blobs(&mut rng), 0.0);
        let a = describe(&img, 77.0);
        let b = describe(&img, 77.0);
        assert_eq!(a.descriptor, b.descriptor);
    }

    #[test]
    fn flat_patch_has_no_descriptor() {
        let img = IrisImage::new(Raster::filled(96, 96, 0.5), 48, "f").unwrap();
        let space = build_scale_space(&img, 1, 3, 1.6).unwrap();
        assert!(compute_descriptor(&space, &stub(0.0)).is_none());
    }

    #[test]
    fn window_outside_raster_is_dropped() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = render(&random_blobs(&mut rng), 0.0);
        let space = build_scale_space(&img, 1, 3, 1.6).unwrap();
        let mut s = stub(0.0);
        s.octave_x = 10.0;
        assert!(compute_descriptor(&space, &s).is_none());
    }

    #[test]
    fn rotated_patch_stays_closer_than_unrelated_patch() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let trials = 50;
        let mut wins = 0;
        for _ in 0..trials {
            let blobs = random_blobs(&mut rng);
            let other = random_blobs(&mut rng);
            let theta = rng.random_range(0.0..360.0);
            let base = describe(&render(&blobs, 0.0), theta);
            let rotated = describe(&render(&blobs, 30.0), (theta + 30.0) % 360.0);
            let unrelated = describe(&render(&other, 0.0), theta);
            if base.descriptor_distance(&rotated) < base.descriptor_distance(&unrelated) {
                wins += 1;
            }
        }
        assert!(wins * 10 >= trials * 9, "{wins}/{trials}");
    }
}
