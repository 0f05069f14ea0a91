use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use skelgraph::analysis::{run_grouping_analysis, DbiSpace, Grouping, Subset};
use skelgraph::embed::{embed, embeddings_to_csv, init_weights, load_embeddings, GcnWeights};
use skelgraph::graph::{classify_nodes, render_overlay, GraphStats, SkeletonGraph};
use skelgraph::imaging::{invert, load_grayscale, BinaryImage};
use skelgraph::io::write_atomic;
use skelgraph::manifest::CorpusManifest;
use skelgraph::pipeline::{
    analyze, graph_for, graph_id_from_stem, preprocess, run_pipeline, verify_summary,
    write_analyses, ArtifactSink, GraphVariant, PipelineConfig,
};
use skelgraph::skeleton::{skeletonize, skeletonize_traced, SkeletonImage};
use skelgraph::synth::{generate, generate_corpus, CorpusGrid, PatternKind, SynthSpec};

/// Default output root when `--out` is not given.
const OUT_ENV: &str = "SKELGRAPH_OUT";

#[derive(Parser)]
#[command(name = "skelgraph", version, about = "Skeleton-graph embeddings and cluster separability for micrographs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage over a manifest.
    Pipeline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, env = OUT_ENV)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Blur, threshold and invert one image.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        pre: PreprocessArgs,
    },
    /// Thin a binary PGM to its skeleton.
    Skeletonize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Invert the binary image first (hole analysis).
        #[arg(long)]
        invert: bool,
        /// Write one PGM per thinning sub-pass into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Build the skeleton graph of a skeleton PGM.
    Graph {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "pixel")]
        graph_variant: GraphVariant,
        /// Render an overlay (PNG or PPM by extension); needs `--binary`.
        #[arg(long, requires = "binary")]
        overlay: Option<PathBuf>,
        /// Binary image drawn beneath the overlay.
        #[arg(long)]
        binary: Option<PathBuf>,
    },
    /// Embed graph JSON files; graph ids come from the `<image>_<structure>` file stems.
    Embed {
        #[arg(long, required = true, num_args = 1..)]
        graphs: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 42, conflicts_with = "weights")]
        gcn_seed: u64,
        /// Load weights exported by a previous run instead of seeding.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Also export the weights used.
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// PCA + Davies-Bouldin analyses over an embedding CSV.
    Analyze {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, env = OUT_ENV)]
        out: PathBuf,
        /// Run a single grouping instead of the full set.
        #[arg(long, requires = "subset")]
        grouping: Option<Grouping>,
        #[arg(long)]
        subset: Option<Subset>,
        #[arg(long, default_value_t = 2)]
        pca_components: usize,
        #[arg(long, default_value = "projected")]
        dbi_space: DbiSpace,
        #[arg(long)]
        no_holes: bool,
    },
    /// Generate a synthetic corpus (or one image with `--output`).
    Synth {
        #[arg(long, env = OUT_ENV, required_unless_present = "output")]
        out: Option<PathBuf>,
        /// Write a single image here instead of a corpus.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "ripples")]
        kind: PatternKind,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        /// Keep branching constant across angle classes.
        #[arg(long)]
        flat_topology: bool,
        /// Single image: stripe/pore angle in degrees.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        /// Single image: pattern scale.
        #[arg(long, default_value_t = 1.0)]
        coarseness: f64,
        /// Single image: bridges per wavelength.
        #[arg(long, default_value_t = 0.0)]
        branching: f64,
    },
    /// Check the digests recorded in a run summary.
    Verify {
        #[arg(long, env = OUT_ENV)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct PreprocessArgs {
    #[arg(long, default_value_t = 100)]
    threshold: u8,
    #[arg(long, default_value_t = 1.0)]
    blur_sigma: f64,
    #[arg(long, default_value_t = 2)]
    blur_radius: usize,
    /// Keep bright pixels as foreground.
    #[arg(long)]
    no_invert: bool,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    #[command(flatten)]
    pre: PreprocessArgs,
    #[arg(long, default_value_t = 42)]
    gcn_seed: u64,
    #[arg(long, default_value_t = 2)]
    pca_components: usize,
    #[arg(long, default_value = "projected")]
    dbi_space: DbiSpace,
    #[arg(long, default_value = "pixel")]
    graph_variant: GraphVariant,
    /// Skip the inverted (hole) pass.
    #[arg(long)]
    no_holes: bool,
    /// Dump thinning sub-passes.
    #[arg(long)]
    trace: bool,
}

impl PreprocessArgs {
    fn apply(&self, config: &mut PipelineConfig) {
        config.threshold = self.threshold;
        config.blur_sigma = self.blur_sigma;
        config.blur_radius = self.blur_radius;
        config.preprocess_invert = !self.no_invert;
    }
}

impl ConfigArgs {
    fn to_config(&self) -> PipelineConfig {
        let mut c = PipelineConfig {
            gcn_seed: self.gcn_seed,
            pca_components: self.pca_components,
            dbi_space: self.dbi_space,
            graph_variant: self.graph_variant,
            analyze_holes: !self.no_holes,
            trace_thinning: self.trace,
            ..PipelineConfig::default()
        };
        self.pre.apply(&mut c);
        c
    }
}

fn file_stem(path: &Path) -> Result<String> {
    Ok(path
        .file_stem()
        .with_context(|| format!("{} has no file name", path.display()))?
        .to_string_lossy()
        .into_owned())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Pipeline {
            manifest,
            out,
            config,
        } => {
            let manifest = CorpusManifest::load(&manifest)?;
            let summary = run_pipeline(&manifest, &config.to_config(), &out)?;
            for a in &summary.analyses {
                println!("{:<16} K={} DBI={:.6}", a.name, a.k, a.dbi);
            }
            for f in &summary.failures {
                eprintln!("failed: {}: {}", f.item, f.error);
            }
            if !summary.is_success() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Preprocess { input, output, pre } => {
            let mut config = PipelineConfig::default();
            pre.apply(&mut config);
            let img = load_grayscale(&input)?;
            preprocess(&img, &config)?.save_pgm(&output)?;
        }
        Command::Skeletonize {
            input,
            output,
            invert: inv,
            trace_dir,
        } => {
            let mut bin = BinaryImage::load_pgm(&input)?;
            if inv {
                bin = invert(&bin);
            }
            let skel = match &trace_dir {
                Some(dir) => {
                    let stem = file_stem(&output)?;
                    let mut result = Ok(());
                    let skel = skeletonize_traced(&bin, |it, pass, img| {
                        if result.is_ok() {
                            let p = dir.join(format!("{stem}_{it:03}_{}.pgm", pass.index()));
                            result = img.save_pgm(&p);
                        }
                    });
                    result?;
                    skel
                }
                None => skeletonize(&bin),
            };
            skel.image().save_pgm(&output)?;
        }
        Command::Graph {
            input,
            output,
            graph_variant,
            overlay,
            binary,
        } => {
            let skel = SkeletonImage::from_thinned(BinaryImage::load_pgm(&input)?);
            let g = graph_for(&skel, graph_variant);
            g.save_json(&output)?;
            if let (Some(overlay), Some(binary)) = (overlay, binary) {
                let bin = BinaryImage::load_pgm(&binary)?;
                render_overlay(&bin, &g, &classify_nodes(&g))?.save(&overlay)?;
            }
            let stats = GraphStats::of(&g);
            log::info!(
                "{} nodes, {} edges, {} branch, {} strict endpoints",
                stats.nodes,
                stats.edges,
                stats.branch_nodes,
                stats.strict_endpoints
            );
        }
        Command::Embed {
            graphs,
            output,
            gcn_seed,
            weights,
            weights_out,
        } => {
            let w = match weights {
                Some(p) => GcnWeights::load_json(&p)?,
                None => init_weights(gcn_seed),
            };
            let mut embeddings = Vec::with_capacity(graphs.len());
            for path in &graphs {
                let stem = file_stem(path)?;
                let id = graph_id_from_stem(&stem).with_context(|| {
                    format!("{}: stem must look like <image>_<wall|hole>", path.display())
                })?;
                let g = SkeletonGraph::load_json(path)?;
                embeddings.push(embed(&g, &w, id).with_context(|| path.display().to_string())?);
            }
            write_atomic(&output, embeddings_to_csv(&embeddings).as_bytes())?;
            if let Some(p) = weights_out {
                w.save_json(&p)?;
            }
        }
        Command::Analyze {
            embeddings,
            manifest,
            out,
            grouping,
            subset,
            pca_components,
            dbi_space,
            no_holes,
        } => {
            let manifest = CorpusManifest::load(&manifest)?;
            let embs = load_embeddings(&embeddings)?;
            let config = PipelineConfig {
                pca_components,
                dbi_space,
                analyze_holes: !no_holes,
                ..PipelineConfig::default()
            };
            config.validate()?;
            let (results, failed) = match (grouping, subset) {
                (Some(g), Some(s)) => (
                    vec![run_grouping_analysis(&embs, &manifest, g, s, &config.analysis_options())?],
                    Vec::new(),
                ),
                _ => analyze(&embs, &manifest, &config),
            };
            let mut sink = ArtifactSink::new(&out);
            write_analyses(&mut sink, &results)?;
            for r in &results {
                println!("{:<16} K={} DBI={:.6}", r.name(), r.report.k, r.report.dbi);
            }
            for (name, err) in &failed {
                eprintln!("failed: {name}: {err}");
            }
            if !failed.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Synth {
            out,
            output,
            kind,
            replicates,
            seed,
            size,
            noise,
            flat_topology,
            angle,
            coarseness,
            branching,
        } => {
            if let Some(output) = output {
                let spec = SynthSpec {
                    kind,
                    angle_deg: angle,
                    coarseness,
                    noise_sigma: noise,
                    branching,
                    seed,
                    dims: (size, size),
                };
                generate(&spec)?.save_pgm(&output)?;
            } else {
                let out = out.expect("clap enforces --out");
                let mut grid = CorpusGrid {
                    kind,
                    replicates,
                    seed,
                    noise_sigma: noise,
                    dims: (size, size),
                    ..CorpusGrid::default()
                };
                if flat_topology {
                    grid.branching = vec![0.5; grid.angles_deg.len()];
                }
                let m = generate_corpus(&grid, &out)?;
                println!("{} images, manifest at {}", m.entries.len(), out.join("manifest.csv").display());
            }
        }
        Command::Verify { out } => {
            let bad = verify_summary(&out)?;
            if !bad.is_empty() {
                for b in &bad {
                    eprintln!("digest mismatch: {b}");
                }
                bail!("{} outputs do not match the run summary", bad.len());
            }
            println!("all digests match");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
