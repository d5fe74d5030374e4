use crate::error::{Error, Result};
use crate::image::{IrisImage, Raster};

use super::blur::{downsample_half, gaussian_blur};

/// One octave of the Gaussian pyramid and its difference-of-Gaussians stack.
#[derive(Clone, Debug)]
pub struct Octave {
    /// `scales_per_octave + 2` blurred rasters.
    pub gaussians: Vec<Raster>,
    /// `gaussians[l + 1] - gaussians[l]`.
    pub dogs: Vec<Raster>,
    /// Blur of each Gaussian layer in this octave's pixel units.
    pub sigmas: Vec<f64>,
}

impl Octave {
    pub fn width(&self) -> usize {
        self.gaussians[0].width()
    }

    pub fn height(&self) -> usize {
        self.gaussians[0].height()
    }
}

#[derive(Clone, Debug)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    pub scales_per_octave: usize,
    pub base_sigma: f64,
}

impl ScaleSpace {
    /// Octave-local blur for a (possibly fractional) layer index.
    pub fn layer_sigma(&self, layer: f64) -> f64 {
        self.base_sigma * 2f64.powf(layer / self.scales_per_octave as f64)
    }
}

/// Largest octave count the side admits (`side >= 2^octaves * 4`).
pub fn max_octaves(side: usize) -> usize {
    let mut n = 0;
    while side >= (1usize << (n + 1)) * 4 {
        n += 1;
    }
    n
}

/// Builds the pyramid for an iris image, assuming the input carries a
/// nominal blur of 0.5 px.
pub fn build_scale_space(
    image: &IrisImage,
    octave_count: usize,
    scales_per_octave: usize,
    base_sigma: f64,
) -> Result<ScaleSpace> {
    build_scale_space_from_raster(
        image.raster(),
        octave_count,
        scales_per_octave,
        base_sigma,
        0.5,
    )
}

pub fn build_scale_space_from_raster(
    raster: &Raster,
    octave_count: usize,
    scales_per_octave: usize,
    base_sigma: f64,
    assumed_blur: f64,
) -> Result<ScaleSpace> {
    if scales_per_octave < 2 {
        return Err(Error::InvalidConfig(
            "scales_per_octave must be at least 2".into(),
        ));
    }
    if octave_count == 0 {
        return Err(Error::InvalidConfig("octave count must be positive".into()));
    }
    if !(base_sigma > assumed_blur && assumed_blur >= 0.0) {
        return Err(Error::InvalidConfig(
            "base_sigma must exceed the assumed input blur".into(),
        ));
    }
    let side = raster.width().min(raster.height());
    let needed = (1usize << octave_count.min(usize::BITS as usize - 3)) * 4;
    if octave_count >= usize::BITS as usize - 3 || side < needed {
        return Err(Error::ImageTooSmall {
            side,
            octaves: octave_count,
            needed,
        });
    }

    let layers = scales_per_octave + 2;
    let k = 2f64.powf(1.0 / scales_per_octave as f64);
    let sigmas: Vec<f64> = (0..layers).map(|i| base_sigma * k.powi(i as i32)).collect();
    let increments: Vec<f64> = (1..layers)
        .map(|i| (sigmas[i] * sigmas[i] - sigmas[i - 1] * sigmas[i - 1]).sqrt())
        .collect();

    let initial = (base_sigma * base_sigma - assumed_blur * assumed_blur).sqrt();
    let mut base = gaussian_blur(raster, initial);
    let mut octaves = Vec::with_capacity(octave_count);
    for o in 0..octave_count {
        if o > 0 {
            // layer `scales_per_octave` carries twice the base blur
            let prev: &Octave = octaves.last().expect("previous octave");
            base = downsample_half(&prev.gaussians[scales_per_octave]);
        }
        let mut gaussians = Vec::with_capacity(layers);
        gaussians.push(base.clone());
        for inc in &increments {
            let next = gaussian_blur(gaussians.last().expect("non-empty"), *inc);
            gaussians.push(next);
        }
        let dogs = gaussians
            .windows(2)
            .map(|pair| {
                let data = pair[1]
                    .data()
                    .iter()
                    .zip(pair[0].data())
                    .map(|(a, b)| a - b)
                    .collect();
                Raster::new(pair[0].width(), pair[0].height(), data)
            })
            .collect();
        octaves.push(Octave {
            gaussians,
            dogs,
            sigmas: sigmas.clone(),
        });
    }
    Ok(ScaleSpace {
        octaves,
        scales_per_octave,
        base_sigma,
    })
}
