//! Grayscale rasters and the localized iris image model.
//!
//! A localized iris image is a square raster of side `2r` whose pupil and
//! iris circles are concentric about `(r, r)`. Pixel `(col, row)` covers the
//! unit square `[col, col + 1) x [row, row + 1)`, so its sample sits at
//! `(col + 0.5, row + 0.5)` and the geometric center of the raster is
//! exactly `(r, r)`. Every coordinate in this crate uses that convention.

use std::path::Path;

use crate::error::{Error, Result};

/// Smallest iris radius for which a scale space can be built.
pub const MIN_RADIUS: u32 = 8;

/// Row-major grayscale raster of `f64` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "raster buffer size mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a raster by evaluating `f(col, row)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Lossless quarter-turn. Content at `(x, y)` moves to `(h - y, x)`,
    /// i.e. a +90 degree rotation in image coordinates (y pointing down),
    /// which increases `atan2(y - c, x - c)` angles by 90 degrees.
    pub fn rotate90(&self) -> Raster {
        let (w, h) = (self.width, self.height);
        let mut out = Raster::filled(h, w, 0.0);
        for row in 0..h {
            for col in 0..w {
                out.set(h - 1 - row, col, self.get(col, row));
            }
        }
        out
    }

    /// Quantizes to 8 bits (values clamped to `[0, 1]`).
    pub fn to_luma8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn from_luma8(width: usize, height: usize, bytes: &[u8]) -> Self {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    /// Writes the raster as an 8-bit grayscale PNG, or PGM when the
    /// extension is `pgm`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let buf = image::GrayImage::from_raw(
            self.width as u32,
            self.height as u32,
            self.to_luma8(),
        )
        .expect("buffer sized from raster");
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => image::ImageFormat::Pnm,
            _ => image::ImageFormat::Png,
        };
        buf.save_with_format(path, format).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// A localized iris sample: a `2r x 2r` raster with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IrisImage {
    raster: Raster,
    radius: u32,
    id: String,
}

impl IrisImage {
    pub fn new(raster: Raster, radius: u32, id: impl Into<String>) -> Result<Self> {
        if radius < MIN_RADIUS {
            return Err(Error::RadiusTooSmall(radius));
        }
        let side = 2 * radius as usize;
        if raster.width() != side || raster.height() != side {
            return Err(Error::DimensionMismatch {
                width: raster.width() as u32,
                height: raster.height() as u32,
                expected: side as u32,
                radius,
            });
        }
        if let Some(v) = raster
            .data()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidImage(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            raster,
            radius,
            id: id.into(),
        })
    }

    #[inline]
    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius as usize
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Pupil/iris center, always `(r, r)`.
    #[inline]
    pub fn center(&self) -> (f64, f64) {
        let r = f64::from(self.radius);
        (r, r)
    }
}

/// How `load_image` treats rasters that are not exactly `2r x 2r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DimensionPolicy {
    /// Reject anything but an exact `2r x 2r` raster.
    #[default]
    Strict,
    /// Center-crop larger rasters to `2r x 2r`.
    CenterCrop,
}

/// Loads an 8-bit grayscale PGM (P5) or PNG as an [`IrisImage`]. Color
/// inputs are converted to luma. The sample id is the file stem.
pub fn load_image(path: &Path, radius: u32, policy: DimensionPolicy) -> Result<IrisImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_image(&bytes, radius, policy, id).map_err(|e| match e {
        Error::Decode { message, .. } => Error::Decode {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Decodes an in-memory PGM/PNG. See [`load_image`].
pub fn decode_image(
    bytes: &[u8],
    radius: u32,
    policy: DimensionPolicy,
    id: impl Into<String>,
) -> Result<IrisImage> {
    if radius < MIN_RADIUS {
        return Err(Error::RadiusTooSmall(radius));
    }
    let decoded = image::load_from_memory(bytes).map_err(|e| Error::Decode {
        path: Default::default(),
        message: e.to_string(),
    })?;
    let luma = decoded.to_luma8();
    let (w, h) = luma.dimensions();
    let side = 2 * radius;
    let mismatch = Error::DimensionMismatch {
        width: w,
        height: h,
        expected: side,
        radius,
    };
    let raster = match policy {
        DimensionPolicy::Strict if w == side && h == side => {
            Raster::from_luma8(w as usize, h as usize, luma.as_raw())
        }
        DimensionPolicy::Strict => return Err(mismatch),
        DimensionPolicy::CenterCrop => {
            if w < side || h < side {
                return Err(mismatch);
            }
            let (x0, y0) = ((w - side) / 2, (h - side) / 2);
            let side = side as usize;
            Raster::from_fn(side, side, |c, r| {
                f64::from(luma.get_pixel(x0 + c as u32, y0 + r as u32).0[0]) / 255.0
            })
        }
    };
    IrisImage::new(raster, radius, id)
}

/// Reads only the header of an image file and returns `(width, height)`.
pub fn image_dimensions(path: &Path) -> Result<(u32, u32)> {
    image::image_dimensions(path).map_err(|e| match e {
        image::ImageError::IoError(source) => Error::io(path, source),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}
