//! Topological descriptors for binarized micrographs.
//!
//! A grayscale image is blurred and thresholded, thinned to a one-pixel
//! skeleton, turned into a pixel-adjacency graph and embedded with a fixed
//! two-layer graph convolution. Sets of embeddings are projected with PCA and
//! the separation of labelled condition groups is scored with the
//! Davies-Bouldin index.

pub mod analysis;
pub mod embed;
pub mod error;
pub mod graph;
pub mod imaging;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod skeleton;
pub mod synth;

pub use error::{Error, Result};
