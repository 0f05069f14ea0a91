//! End-to-end orchestration: image → binary → skeleton → graph → embedding
//! → grouping analyses, with every artifact written under one output root.
//!
//! Output layout (paths relative to the root):
//!
//! ```text
//! binary/<id>.pgm                  preprocessed image
//! skeleton/<id>_<structure>.pgm    thinned foreground (wall and hole)
//! graphs/<id>_<structure>.json     skeleton graph
//! overlays/<id>_<structure>.png    graph drawn over the binary image
//! weights.json                     GCN weights
//! embeddings.csv
//! analysis/<grouping>_<subset>.{json,csv,svg}
//! run_summary.json                 config, seeds, digests of all of the above
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    graph_id, run_grouping_analysis, AnalysisOptions, DbiSpace, Grouping, GroupingResult, Subset,
};
use crate::embed::{embed, embeddings_to_csv, init_weights, Embedding, HIDDEN};
use crate::error::{Error, Result};
use crate::graph::{
    build_pixel_graph, classify_nodes, condense_graph, render_overlay, GraphStats, SkeletonGraph,
};
use crate::imaging::{gaussian_blur, invert, load_grayscale, threshold_binarize, BinaryImage, GrayImage};
use crate::io::{sha256_hex, write_atomic};
use crate::manifest::{CorpusManifest, ManifestEntry, Structure};
use crate::skeleton::{skeletonize, skeletonize_traced, SkeletonImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphVariant {
    Pixel,
    Condensed,
}

impl std::str::FromStr for GraphVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixel" => Ok(GraphVariant::Pixel),
            "condensed" => Ok(GraphVariant::Condensed),
            _ => Err(Error::Invalid(format!("unknown graph variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub blur_sigma: f64,
    pub blur_radius: usize,
    pub threshold: u8,
    /// Invert after thresholding, so dark structures become foreground.
    pub preprocess_invert: bool,
    pub gcn_seed: u64,
    pub pca_components: usize,
    pub dbi_space: DbiSpace,
    pub graph_variant: GraphVariant,
    pub analyze_holes: bool,
    /// Dump every thinning sub-pass under `skeleton/trace/`.
    pub trace_thinning: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            blur_sigma: 1.0,
            blur_radius: 2,
            threshold: 100,
            preprocess_invert: true,
            gcn_seed: 42,
            pca_components: 2,
            dbi_space: DbiSpace::Projected,
            graph_variant: GraphVariant::Pixel,
            analyze_holes: true,
            trace_thinning: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=HIDDEN).contains(&self.pca_components) {
            return Err(Error::Parameter {
                name: "pca_components",
                reason: format!("must be in 1..={HIDDEN}, got {}", self.pca_components),
            });
        }
        crate::imaging::gaussian_kernel(self.blur_sigma, self.blur_radius)?;
        Ok(())
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            components: self.pca_components,
            space: self.dbi_space,
        }
    }

    /// The grouping analyses run by [`run_pipeline`]: wall-vs-hole, then
    /// fluence and angle over both structures, walls only and holes only.
    pub fn analyses(&self) -> Vec<(Grouping, Subset)> {
        if !self.analyze_holes {
            return vec![(Grouping::Fluence, Subset::Walls), (Grouping::Angle, Subset::Walls)];
        }
        let mut out = vec![(Grouping::Structure, Subset::Both)];
        for g in [Grouping::Fluence, Grouping::Angle] {
            for s in [Subset::Both, Subset::Walls, Subset::Holes] {
                out.push((g, s));
            }
        }
        out
    }
}

/// Blur, threshold and (by default) invert.
pub fn preprocess(img: &GrayImage, config: &PipelineConfig) -> Result<BinaryImage> {
    let blurred = gaussian_blur(img, config.blur_sigma, config.blur_radius)?;
    let bin = threshold_binarize(&blurred, config.threshold);
    Ok(if config.preprocess_invert { invert(&bin) } else { bin })
}

/// Graph handed to the embedder for the configured variant.
pub fn graph_for(skel: &SkeletonImage, variant: GraphVariant) -> SkeletonGraph {
    let pixel = build_pixel_graph(skel);
    match variant {
        GraphVariant::Pixel => pixel,
        GraphVariant::Condensed => condense_graph(&pixel).to_skeleton_graph(),
    }
}

/// File stem shared by the skeleton, graph and overlay of one pass.
pub fn artifact_stem(image_id: &str, structure: Structure) -> String {
    format!("{image_id}_{structure}")
}

/// Inverse of [`artifact_stem`], giving the graph id.
pub fn graph_id_from_stem(stem: &str) -> Option<String> {
    let (image, structure) = stem.rsplit_once('_')?;
    Some(graph_id(image, structure.parse().ok()?))
}

/// Collects written files and their digests.
#[derive(Debug)]
pub struct ArtifactSink {
    root: PathBuf,
    digests: BTreeMap<String, String>,
}

impl ArtifactSink {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            digests: BTreeMap::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(rel), bytes)?;
        self.digests.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn absorb(&mut self, files: Vec<(String, Vec<u8>)>) -> Result<()> {
        for (rel, bytes) in files {
            self.write(&rel, &bytes)?;
        }
        Ok(())
    }

    pub fn digests(&self) -> &BTreeMap<String, String> {
        &self.digests
    }
}

struct ImageOutput {
    files: Vec<(String, Vec<u8>)>,
    graphs: Vec<(String, SkeletonGraph)>,
}

fn process_image(
    manifest: &CorpusManifest,
    entry: &ManifestEntry,
    config: &PipelineConfig,
) -> Result<ImageOutput> {
    let img = load_grayscale(&manifest.resolve(entry))?;
    let bin = preprocess(&img, config)?;
    let mut files = vec![(format!("binary/{}.pgm", entry.image_id), bin.to_pgm_bytes())];
    let mut graphs = Vec::new();

    let mut passes = vec![(entry.structure, bin.clone())];
    if config.analyze_holes {
        passes.push((entry.structure.opposite(), invert(&bin)));
    }
    for (structure, fg) in passes {
        let stem = artifact_stem(&entry.image_id, structure);
        let skel = if config.trace_thinning {
            skeletonize_traced(&fg, |it, pass, img| {
                files.push((
                    format!("skeleton/trace/{stem}_{it:03}_{}.pgm", pass.index()),
                    img.to_pgm_bytes(),
                ))
            })
        } else {
            skeletonize(&fg)
        };
        files.push((format!("skeleton/{stem}.pgm"), skel.image().to_pgm_bytes()));
        let g = graph_for(&skel, config.graph_variant);
        files.push((format!("graphs/{stem}.json"), g.to_json().into_bytes()));
        let overlay = render_overlay(&fg, &g, &classify_nodes(&g))?;
        files.push((format!("overlays/{stem}.png"), overlay.to_png_bytes()?));
        graphs.push((graph_id(&entry.image_id, structure), g));
    }
    Ok(ImageOutput { files, graphs })
}

/// Writes the report, scatter CSV and SVG of every analysis.
pub fn write_analyses(sink: &mut ArtifactSink, results: &[GroupingResult]) -> Result<()> {
    for r in results {
        let name = r.name();
        sink.write(&format!("analysis/{name}.json"), r.report_json().as_bytes())?;
        sink.write(&format!("analysis/{name}.csv"), r.scatter_csv().as_bytes())?;
        sink.write(&format!("analysis/{name}.svg"), r.svg().as_bytes())?;
    }
    Ok(())
}

/// Runs every configured grouping; failures are returned beside the results.
pub fn analyze(
    embeddings: &[Embedding],
    manifest: &CorpusManifest,
    config: &PipelineConfig,
) -> (Vec<GroupingResult>, Vec<(String, String)>) {
    let opts = config.analysis_options();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (g, s) in config.analyses() {
        match run_grouping_analysis(embeddings, manifest, g, s, &opts) {
            Ok(r) => ok.push(r),
            Err(e) => failed.push((format!("{g}_{s}"), e.to_string())),
        }
    }
    (ok, failed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub name: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub dbi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: PipelineConfig,
    pub images: usize,
    pub graph_stats: BTreeMap<String, GraphStats>,
    pub analyses: Vec<AnalysisSummary>,
    pub failures: Vec<Failure>,
    /// Relative path → SHA-256 of every file written in this run.
    pub outputs: BTreeMap<String, String>,
}

impl RunSummary {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_value(self)
            .expect("summary serializes")
            .to_string()
    }
}

pub const SUMMARY_FILE: &str = "run_summary.json";

/// Full pipeline over a manifest. Per-image and per-analysis failures are
/// recorded in the summary and skipped; manifest problems abort the run.
pub fn run_pipeline(
    manifest: &CorpusManifest,
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<RunSummary> {
    config.validate()?;
    if manifest.entries.is_empty() {
        return Err(Error::NoInputs);
    }
    manifest.validate_files()?;

    let mut sink = ArtifactSink::new(out_dir);
    let mut failures = Vec::new();

    let outputs: Vec<Result<ImageOutput>> = manifest
        .entries
        .par_iter()
        .map(|e| process_image(manifest, e, config))
        .collect();

    let mut graphs: Vec<(String, SkeletonGraph)> = Vec::new();
    for (entry, out) in manifest.entries.iter().zip(outputs) {
        match out {
            Ok(out) => {
                sink.absorb(out.files)?;
                graphs.extend(out.graphs);
            }
            Err(e) => {
                log::warn!("{}: {e}", entry.image_id);
                failures.push(Failure {
                    item: entry.image_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    log::info!("{} images processed, {} graphs", manifest.entries.len(), graphs.len());
    let weights = init_weights(config.gcn_seed);
    sink.write("weights.json", weights.to_json().as_bytes())?;
    let mut embeddings = Vec::new();
    let embedded: Vec<_> = graphs
        .par_iter()
        .map(|(id, g)| embed(g, &weights, id.clone()))
        .collect();
    for ((id, _), e) in graphs.iter().zip(embedded) {
        match e {
            Ok(e) => embeddings.push(e),
            Err(err) => failures.push(Failure {
                item: id.clone(),
                error: err.to_string(),
            }),
        }
    }
    sink.write("embeddings.csv", embeddings_to_csv(&embeddings).as_bytes())?;

    let (results, failed) = analyze(&embeddings, manifest, config);
    write_analyses(&mut sink, &results)?;
    log::info!("{} analyses written to {}", results.len(), out_dir.display());
    failures.extend(failed.into_iter().map(|(item, error)| Failure { item, error }));

    let summary = RunSummary {
        config: config.clone(),
        images: manifest.entries.len(),
        graph_stats: graphs
            .iter()
            .map(|(id, g)| (id.clone(), GraphStats::of(g)))
            .collect(),
        analyses: results
            .iter()
            .map(|r| AnalysisSummary {
                name: r.name(),
                k: r.report.k,
                dbi: r.report.dbi,
            })
            .collect(),
        failures,
        outputs: sink.digests().clone(),
    };
    write_atomic(&out_dir.join(SUMMARY_FILE), summary.to_json().as_bytes())?;
    Ok(summary)
}

/// Re-hashes every file listed in a run summary; returns the paths whose
/// content no longer matches.
pub fn verify_summary(out_dir: &Path) -> Result<Vec<String>> {
    let path = out_dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(&path, "run summary", e.to_string()))?;
    let outputs = value["outputs"]
        .as_object()
        .ok_or_else(|| Error::parse(&path, "run summary", "missing outputs"))?;
    let mut bad = Vec::new();
    for (rel, digest) in outputs {
        let actual = crate::io::file_digest(&out_dir.join(rel)).ok();
        if actual.as_deref() != digest.as_str() {
            bad.push(rel.clone());
        }
    }
    Ok(bad)
}
