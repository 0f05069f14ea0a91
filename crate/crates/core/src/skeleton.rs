//! Zhang-Suen parallel thinning.
//!
//! Neighbours of a pixel `p` are labelled clockwise starting north:
//!
//! ```text
//! P9 P2 P3
//! P8 p  P4
//! P7 P6 P5
//! ```
//!
//! Pixels outside the image count as background. Each sub-pass reads the
//! frozen input image and deletes every marked pixel at once, so scan order
//! does not affect the result.

use crate::imaging::BinaryImage;

/// Offsets `(drow, dcol)` for P2..P9.
const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubPass {
    First,
    Second,
}

impl SubPass {
    pub fn index(self) -> u8 {
        match self {
            SubPass::First => 1,
            SubPass::Second => 2,
        }
    }
}

impl TryFrom<u8> for SubPass {
    type Error = crate::Error;

    fn try_from(v: u8) -> crate::Result<Self> {
        match v {
            1 => Ok(SubPass::First),
            2 => Ok(SubPass::Second),
            _ => Err(crate::Error::Parameter {
                name: "sub_pass",
                reason: format!("must be 1 or 2, got {v}"),
            }),
        }
    }
}

/// The thinned image. Only produced by [`skeletonize`], so it is always a
/// fixed point of both sub-passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonImage(BinaryImage);

impl SkeletonImage {
    pub fn image(&self) -> &BinaryImage {
        &self.0
    }

    pub fn into_image(self) -> BinaryImage {
        self.0
    }

    /// Wraps an image that is already thinned (e.g. read back from disk).
    /// The caller is trusted; [`skeletonize`] would leave it unchanged.
    pub fn from_thinned(img: BinaryImage) -> Self {
        SkeletonImage(img)
    }
}

fn neighbourhood(img: &BinaryImage, row: usize, col: usize) -> [u8; 8] {
    let mut p = [0u8; 8];
    for (slot, (dr, dc)) in p.iter_mut().zip(NEIGHBOURS) {
        *slot = img.get_or_zero(row as isize + dr, col as isize + dc);
    }
    p
}

fn marked(p: &[u8; 8], pass: SubPass) -> bool {
    let b: u8 = p.iter().sum();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&i| p[i] == 0 && p[(i + 1) % 8] == 1).count();
    if a != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = *p;
    match pass {
        SubPass::First => p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0,
        SubPass::Second => p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0,
    }
}

/// Runs one sub-iteration and returns the thinned image with the number of
/// deleted pixels.
pub fn thinning_pass(bin: &BinaryImage, pass: SubPass) -> (BinaryImage, usize) {
    let mut out = bin.clone();
    let mut deleted = 0;
    for row in 0..bin.height() {
        for col in 0..bin.width() {
            if bin.get(row, col) == 1 && marked(&neighbourhood(bin, row, col), pass) {
                out.set(row, col, false);
                deleted += 1;
            }
        }
    }
    (out, deleted)
}

pub fn skeletonize(bin: &BinaryImage) -> SkeletonImage {
    skeletonize_traced(bin, |_, _, _| {})
}

/// Like [`skeletonize`], calling `trace(iteration, sub_pass, image)` after
/// every sub-pass. Iterations count from 1.
pub fn skeletonize_traced<F>(bin: &BinaryImage, mut trace: F) -> SkeletonImage
where
    F: FnMut(usize, SubPass, &BinaryImage),
{
    let mut img = bin.clone();
    let mut iteration = 0;
    loop {
        iteration += 1;
        let (first, d1) = thinning_pass(&img, SubPass::First);
        trace(iteration, SubPass::First, &first);
        let (second, d2) = thinning_pass(&first, SubPass::Second);
        trace(iteration, SubPass::Second, &second);
        img = second;
        if d1 + d2 == 0 {
            return SkeletonImage(img);
        }
    }
}
