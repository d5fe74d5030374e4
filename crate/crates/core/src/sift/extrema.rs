//! Scale-space extremum detection with quadratic sub-pixel refinement.

use super::scale_space::ScaleSpace;

const MAX_REFINE_STEPS: usize = 5;

/// A refined DoG extremum.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    /// Base-image coordinates.
    pub x: f64,
    pub y: f64,
    /// Detection scale in base-image pixels.
    pub sigma: f64,
    pub octave: usize,
    /// DoG layer the extremum converged in.
    pub layer: usize,
    /// Refined position in octave pixel-index units.
    pub octave_x: f64,
    pub octave_y: f64,
    /// Refined fractional layer (`layer + offset`).
    pub octave_layer: f64,
    /// Interpolated DoG value.
    pub response: f64,
}

/// Finds local extrema of the DoG stack over each 3x3x3 neighborhood,
/// refines them to sub-pixel accuracy and filters low-contrast and
/// edge-like responses.
pub fn detect_keypoints(
    space: &ScaleSpace,
    contrast_threshold: f64,
    edge_ratio_threshold: f64,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    let prefilter = 0.5 * contrast_threshold;
    for (o, octave) in space.octaves.iter().enumerate() {
        let (w, h) = (octave.width(), octave.height());
        if w < 3 || h < 3 {
            continue;
        }
        let dogs = &octave.dogs;
        for layer in 1..dogs.len() - 1 {
            for row in 1..h - 1 {
                for col in 1..w - 1 {
                    let v = dogs[layer].get(col, row);
                    if v.abs() <= prefilter || !is_extremum(dogs, layer, col, row, v) {
                        continue;
                    }
                    if let Some(c) = refine(
                        space,
                        o,
                        layer,
                        col,
                        row,
                        contrast_threshold,
                        edge_ratio_threshold,
                    ) {
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

fn is_extremum(dogs: &[crate::image::Raster], layer: usize, col: usize, row: usize, v: f64) -> bool {
    let mut is_max = true;
    let mut is_min = true;
    for l in layer - 1..=layer + 1 {
        let img = &dogs[l];
        for r in row - 1..=row + 1 {
            for c in col - 1..=col + 1 {
                if l == layer && r == row && c == col {
                    continue;
                }
                let n = img.get(c, r);
                is_max &= v > n;
                is_min &= v < n;
                if !is_max && !is_min {
                    return false;
                }
            }
        }
    }
    is_max || is_min
}

/// Solves the 3x3 system `h * x = b` by Cramer's rule.
fn solve3(h: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(h);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = h;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *xk = det(m) / d;
    }
    Some(x)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    space: &ScaleSpace,
    octave_idx: usize,
    mut layer: usize,
    mut col: usize,
    mut row: usize,
    contrast_threshold: f64,
    edge_ratio_threshold: f64,
) -> Option<Candidate> {
    let octave = &space.octaves[octave_idx];
    let dogs = &octave.dogs;
    let (w, h) = (octave.width(), octave.height());
    let mut step = 0;
    let (offset, grad) = loop {
        let at = |l: usize, c: usize, r: usize| dogs[l].get(c, r);
        let v = at(layer, col, row);
        let g = [
            0.5 * (at(layer, col + 1, row) - at(layer, col - 1, row)),
            0.5 * (at(layer, col, row + 1) - at(layer, col, row - 1)),
            0.5 * (at(layer + 1, col, row) - at(layer - 1, col, row)),
        ];
        let dxx = at(layer, col + 1, row) + at(layer, col - 1, row) - 2.0 * v;
        let dyy = at(layer, col, row + 1) + at(layer, col, row - 1) - 2.0 * v;
        let dss = at(layer + 1, col, row) + at(layer - 1, col, row) - 2.0 * v;
        let dxy = 0.25
            * (at(layer, col + 1, row + 1) - at(layer, col - 1, row + 1)
                - at(layer, col + 1, row - 1)
                + at(layer, col - 1, row - 1));
        let dxs = 0.25
            * (at(layer + 1, col + 1, row) - at(layer + 1, col - 1, row)
                - at(layer - 1, col + 1, row)
                + at(layer - 1, col - 1, row));
        let dys = 0.25
            * (at(layer + 1, col, row + 1) - at(layer + 1, col, row - 1)
                - at(layer - 1, col, row + 1)
                + at(layer - 1, col, row - 1));
        let hess = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
        let off = solve3(hess, [-g[0], -g[1], -g[2]])?;
        if off.iter().all(|o| o.abs() < 0.5) {
            break (off, g);
        }
        if off.iter().any(|o| !o.is_finite() || o.abs() > 1e6) {
            return None;
        }
        step += 1;
        if step >= MAX_REFINE_STEPS {
            return None;
        }
        let nc = col as isize + off[0].round() as isize;
        let nr = row as isize + off[1].round() as isize;
        let nl = layer as isize + off[2].round() as isize;
        if nl < 1
            || nl as usize > dogs.len() - 2
            || nc < 1
            || nc as usize > w - 2
            || nr < 1
            || nr as usize > h - 2
        {
            return None;
        }
        col = nc as usize;
        row = nr as usize;
        layer = nl as usize;
    };

    let v = dogs[layer].get(col, row);
    let response = v + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
    if response.abs() < contrast_threshold {
        return None;
    }

    let at = |c: usize, r: usize| dogs[layer].get(c, r);
    let dxx = at(col + 1, row) + at(col - 1, row) - 2.0 * v;
    let dyy = at(col, row + 1) + at(col, row - 1) - 2.0 * v;
    let dxy = 0.25
        * (at(col + 1, row + 1) - at(col - 1, row + 1) - at(col + 1, row - 1)
            + at(col - 1, row - 1));
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = edge_ratio_threshold;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }

    let octave_x = col as f64 + offset[0];
    let octave_y = row as f64 + offset[1];
    let octave_layer = layer as f64 + offset[2];
    let scale = (1usize << octave_idx) as f64;
    Some(Candidate {
        x: (octave_x + 0.5) * scale,
        y: (octave_y + 0.5) * scale,
        sigma: space.layer_sigma(octave_layer) * scale,
        octave: octave_idx,
        layer,
        octave_x,
        octave_y,
        octave_layer,
        response,
    })
}
