//! Raster loading and the preprocessing chain: Gaussian blur, threshold
//! binarization and inversion.
//!
//! Images are stored row-major. Binary images hold one byte per pixel with
//! values restricted to `{0, 1}`; they are written to disk as PGM with
//! values `{0, 255}`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    /// Binary PGM (P5) encoding.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        encode_pgm(self.width, self.height, &self.data)
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_pgm_bytes())
    }
}

/// Raster whose pixels are all 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::Invalid(format!(
                "binary image pixel has value {bad}, expected 0 or 1"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    /// Builds an image from rows of `'#'` (foreground) and any other
    /// character (background). All rows must have equal length.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut data = Vec::with_capacity(width * height);
        for row in rows {
            if row.chars().count() != width {
                return Err(Error::Invalid("ragged ascii image".into()));
            }
            data.extend(row.chars().map(|c| u8::from(c == '#')));
        }
        Self::new(width, height, data)
    }

    pub fn to_ascii(&self) -> Vec<String> {
        self.data
            .chunks(self.width)
            .map(|row| row.iter().map(|&v| if v == 1 { '#' } else { '.' }).collect())
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    /// Like [`get`](Self::get) but treats everything outside the image as 0.
    pub fn get_or_zero(&self, row: isize, col: isize) -> u8 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            0
        } else {
            self.data[row as usize * self.width + col as usize]
        }
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.data[row * self.width + col] = u8::from(on);
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Binary PGM (P5) with foreground written as 255.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let scaled: Vec<u8> = self.data.iter().map(|&v| v * 255).collect();
        encode_pgm(self.width, self.height, &scaled)
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_pgm_bytes())
    }

    /// Reads a PGM written by [`save_pgm`](Self::save_pgm); any nonzero
    /// intensity is foreground.
    pub fn load_pgm(path: &Path) -> Result<Self> {
        let gray = load_grayscale(path)?;
        let data = gray.data.iter().map(|&v| u8::from(v != 0)).collect();
        Self::new(gray.width, gray.height, data)
    }
}

/// 8-bit RGB raster used for graph overlays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        self.data[row * self.width + col] = rgb;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().flatten());
        out
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let flat: Vec<u8> = self.data.iter().flatten().copied().collect();
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, flat)
            .ok_or_else(|| Error::Invalid("rgb buffer size mismatch".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| Error::Invalid(format!("png encoding failed: {e}")))?;
        Ok(out.into_inner())
    }

    /// Writes PNG when the extension is `.png`, PPM otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        let bytes = if is_png {
            self.to_png_bytes()?
        } else {
            self.to_ppm_bytes()
        };
        write_atomic(path, &bytes)
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Invalid(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if len != width * height {
        return Err(Error::DimensionMismatch {
            expected: width * height,
            actual: len,
        });
    }
    Ok(())
}

fn encode_pgm(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

/// ITU-R 601 luma, `0.299 R + 0.587 G + 0.114 B`, rounded half-up.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((weighted + 500) / 1000) as u8
}

/// Loads an 8-bit grayscale raster from PGM (P2/P5), PPM (P3/P6) or PNG.
/// Colour inputs are reduced with [`luminance`].
pub fn load_grayscale(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grayscale(path, &bytes)
}

/// Decodes raster bytes; `path` is only used for error messages.
pub fn decode_grayscale(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    match bytes {
        [b'P', kind @ (b'2' | b'3' | b'5' | b'6'), ..] => decode_netpbm(path, *kind, bytes),
        [0x89, b'P', b'N', b'G', ..] => decode_png(path, bytes),
        _ => Err(Error::UnsupportedRaster {
            path: path.to_path_buf(),
            reason: "not a PGM, PPM or PNG file".into(),
        }),
    }
}

fn decode_netpbm(path: &Path, kind: u8, bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 2;
    let mut header = [0usize; 3];
    for field in header.iter_mut() {
        *field = read_header_int(path, bytes, &mut pos)?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedRaster {
            path: path.to_path_buf(),
            reason: format!("maxval {maxval} is not an 8-bit depth"),
        });
    }
    let channels = if matches!(kind, b'3' | b'6') { 3 } else { 1 };
    let count = width * height * channels;
    let samples: Vec<u8> = if matches!(kind, b'5' | b'6') {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        bytes
            .get(pos..pos + count)
            .ok_or_else(|| Error::parse(path, "netpbm", "raster data truncated"))?
            .to_vec()
    } else {
        (0..count)
            .map(|_| read_header_int(path, bytes, &mut pos).map(|v| v.min(255) as u8))
            .collect::<Result<_>>()?
    };
    if samples.iter().any(|&v| usize::from(v) > maxval) {
        return Err(Error::parse(path, "netpbm", "sample exceeds maxval"));
    }
    let data = if channels == 3 {
        samples
            .chunks_exact(3)
            .map(|p| luminance(p[0], p[1], p[2]))
            .collect()
    } else {
        samples
    };
    GrayImage::new(width, height, data).map_err(|e| Error::parse(path, "netpbm", e.to_string()))
}

fn read_header_int(path: &Path, bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::parse(path, "netpbm", "unexpected end of header")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, "netpbm", "expected an integer"))
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| {
        Error::UnsupportedRaster {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    })?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data = match img {
        image::DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        image::DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        image::DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| luminance(p.0[0], p.0[1], p.0[2]))
            .collect(),
        image::DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| luminance(p.0[0], p.0[1], p.0[2]))
            .collect(),
        other => {
            return Err(Error::UnsupportedRaster {
                path: path.to_path_buf(),
                reason: format!("unsupported pixel layout {:?}", other.color()),
            })
        }
    };
    GrayImage::new(width, height, data)
}

/// Normalized 1-D Gaussian weights for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter {
            name: "sigma",
            reason: format!("must be positive and finite, got {sigma}"),
        });
    }
    if radius == 0 {
        return Err(Error::Parameter {
            name: "radius",
            reason: "must be at least 1".into(),
        });
    }
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Separable Gaussian blur with a `(2·radius+1)` kernel and edge replication.
///
/// Both passes run in `f64`; the result is rounded half-up once at the end.
pub fn gaussian_blur(img: &GrayImage, sigma: f64, radius: usize) -> Result<GrayImage> {
    let kernel = gaussian_kernel(sigma, radius)?;
    let (w, h) = (img.width, img.height);
    let r = radius as isize;
    let clamp = |v: isize, len: usize| v.clamp(0, len as isize - 1) as usize;

    let mut horizontal = vec![0.0f64; w * h];
    for row in 0..h {
        let src = &img.data[row * w..(row + 1) * w];
        for col in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let c = clamp(col as isize + k as isize - r, w);
                acc += weight * f64::from(src[c]);
            }
            horizontal[row * w + col] = acc;
        }
    }

    let mut out = vec![0u8; w * h];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let rr = clamp(row as isize + k as isize - r, h);
                acc += weight * horizontal[rr * w + col];
            }
            out[row * w + col] = round_half_up(acc);
        }
    }
    GrayImage::new(w, h, out)
}

pub(crate) fn round_half_up(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Foreground where the intensity is strictly greater than `threshold`.
pub fn threshold_binarize(img: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&v| u8::from(v > threshold)).collect(),
    }
}

pub fn invert(bin: &BinaryImage) -> BinaryImage {
    BinaryImage {
        width: bin.width,
        height: bin.height,
        data: bin.data.iter().map(|&v| 1 - v).collect(),
    }
}
