//! Separable Gaussian filtering with mirrored borders.

use crate::image::Raster;

/// One half of a normalized Gaussian kernel: `weights[0]` is the center tap
/// and `weights[k]` applies to both `-k` and `+k`.
#[derive(Clone, Debug)]
pub struct GaussianKernel {
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma > 0.0, "gaussian sigma must be positive");
        let radius = (4.0 * sigma).ceil().max(1.0) as usize;
        let mut weights: Vec<f64> = (0..=radius)
            .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { weights }
    }

    pub fn radius(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Maps an out-of-range index into `[0, n)` by reflection about the edge
/// samples (`-1 -> 1`, `n -> n - 2`).
#[inline]
pub(crate) fn reflect(idx: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut i = idx.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

fn convolve_line(src: &[f64], dst: &mut [f64], kernel: &GaussianKernel) {
    let n = src.len();
    let w = kernel.weights();
    for (i, out) in dst.iter_mut().enumerate() {
        let mut acc = w[0] * src[i];
        for (k, &wk) in w.iter().enumerate().skip(1) {
            let lo = reflect(i as isize - k as isize, n);
            let hi = reflect(i as isize + k as isize, n);
            acc += wk * (src[lo] + src[hi]);
        }
        *out = acc;
    }
}

/// Blurs horizontally then vertically.
pub fn gaussian_blur(src: &Raster, sigma: f64) -> Raster {
    let kernel = GaussianKernel::new(sigma);
    let (w, h) = (src.width(), src.height());
    let mut tmp = vec![0.0; w * h];
    for (row, out) in src.data().chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
        convolve_line(row, out, &kernel);
    }
    let mut out = vec![0.0; w * h];
    let mut column = vec![0.0; h];
    let mut column_out = vec![0.0; h];
    for col in 0..w {
        for row in 0..h {
            column[row] = tmp[row * w + col];
        }
        convolve_line(&column, &mut column_out, &kernel);
        for row in 0..h {
            out[row * w + col] = column_out[row];
        }
    }
    Raster::new(w, h, out)
}

/// Halves each side by averaging 2x2 blocks. Output pixel `i` spans input
/// pixels `2i` and `2i + 1`, so continuous coordinates scale by exactly 2.
pub fn downsample_half(src: &Raster) -> Raster {
    let (w, h) = (src.width() / 2, src.height() / 2);
    Raster::from_fn(w, h, |c, r| {
        0.25 * (src.get(2 * c, 2 * r)
            + src.get(2 * c + 1, 2 * r)
            + src.get(2 * c, 2 * r + 1)
            + src.get(2 * c + 1, 2 * r + 1))
    })
}
