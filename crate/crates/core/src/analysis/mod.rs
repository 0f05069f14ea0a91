//! PCA projection, Davies-Bouldin scoring and class hulls over labelled
//! embedding sets.

pub mod dbi;
pub mod hull;
pub mod pca;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

pub use dbi::{davies_bouldin, ClusterStats, DbiReport, LabeledPoints};
pub use hull::{contains, convex_hull, Point};
pub use pca::{pca_fit, pca_project, PcaModel};

use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::manifest::{CorpusManifest, Structure};

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::Invalid(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), s
                    ))),
                }
            }
        }
    };
}

string_enum!(Grouping { Fluence => "fluence", Angle => "angle", Structure => "structure" });
string_enum!(Subset { Walls => "walls", Holes => "holes", Both => "both" });
string_enum!(DbiSpace { Projected => "projected", Embedding => "embedding" });

impl Subset {
    fn admits(self, s: Structure) -> bool {
        match self {
            Subset::Walls => s == Structure::Wall,
            Subset::Holes => s == Structure::Hole,
            Subset::Both => true,
        }
    }
}

/// `image_id:structure`, the id of one skeleton graph.
pub fn graph_id(image_id: &str, structure: Structure) -> String {
    format!("{image_id}:{structure}")
}

pub fn parse_graph_id(id: &str) -> Option<(&str, Structure)> {
    let (image, structure) = id.rsplit_once(':')?;
    Some((image, structure.parse().ok()?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub components: usize,
    pub space: DbiSpace,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            components: 2,
            space: DbiSpace::Projected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub graph_id: String,
    pub label: String,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingResult {
    pub grouping: Grouping,
    pub subset: Subset,
    pub space: DbiSpace,
    pub report: DbiReport,
    pub pca: PcaModel,
    pub scatter: Vec<ScatterPoint>,
    /// Per label, counterclockwise hull of the (pc1, pc2) points.
    pub hulls: BTreeMap<String, Vec<Point>>,
}

impl GroupingResult {
    pub fn name(&self) -> String {
        format!("{}_{}", self.grouping, self.subset)
    }

    /// Key-sorted report JSON.
    pub fn report_json(&self) -> String {
        let clusters: Vec<_> = self
            .report
            .clusters
            .iter()
            .map(|c| {
                json!({"label": c.label, "size": c.size, "centroid": c.centroid, "scatter": c.scatter})
            })
            .collect();
        let hulls: BTreeMap<&str, Vec<[f64; 2]>> = self
            .hulls
            .iter()
            .map(|(k, v)| (k.as_str(), v.iter().map(|&(x, y)| [x, y]).collect()))
            .collect();
        json!({
            "grouping": self.grouping,
            "subset": self.subset,
            "space": self.space,
            "K": self.report.k,
            "dbi": self.report.dbi,
            "clusters": clusters,
            "distances": self.report.distances,
            "hulls": hulls,
            "pca": {
                "explained_variance": self.pca.explained_variance,
                "components_digest": self.pca.components_digest(),
            },
        })
        .to_string()
    }

    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("graph_id,label,pc1,pc2\n");
        for p in &self.scatter {
            out.push_str(&format!("{},{},{:.16e},{:.16e}\n", p.graph_id, p.label, p.pc1, p.pc2));
        }
        out
    }

    /// Scatter plot with one hull polygon per class.
    pub fn svg(&self) -> String {
        const SIZE: f64 = 480.0;
        const PAD: f64 = 40.0;
        const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
        let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
        for p in &self.scatter {
            lo = (lo.0.min(p.pc1), lo.1.min(p.pc2));
            hi = (hi.0.max(p.pc1), hi.1.max(p.pc2));
        }
        let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
        let sx = |x: f64| PAD + (x - lo.0) / span(lo.0, hi.0) * (SIZE - 2.0 * PAD);
        let sy = |y: f64| SIZE - PAD - (y - lo.1) / span(lo.1, hi.1) * (SIZE - 2.0 * PAD);
        let colour: BTreeMap<&str, &str> = self
            .hulls
            .keys()
            .enumerate()
            .map(|(i, k)| (k.as_str(), COLOURS[i % COLOURS.len()]))
            .collect();

        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{PAD}\" y=\"20\" font-size=\"14\">{} / {}: DBI = {:.4}</text>\n",
            self.grouping, self.subset, self.report.dbi
        );
        for (label, hull) in &self.hulls {
            let pts: Vec<String> = hull
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            out.push_str(&format!(
                "<polygon points=\"{}\" fill=\"none\" stroke=\"{}\"/>\n",
                pts.join(" "),
                colour[label.as_str()]
            ));
        }
        for p in &self.scatter {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"><title>{}</title></circle>\n",
                sx(p.pc1),
                sy(p.pc2),
                colour[p.label.as_str()],
                p.graph_id
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn label_of(grouping: Grouping, fluence: u8, angle: u8, structure: Structure) -> String {
    match grouping {
        Grouping::Fluence => fluence.to_string(),
        Grouping::Angle => angle.to_string(),
        Grouping::Structure => structure.to_string(),
    }
}

/// Selects the subset, fits PCA, projects, and scores the grouping with the
/// Davies-Bouldin index.
pub fn run_grouping_analysis(
    embeddings: &[Embedding],
    manifest: &CorpusManifest,
    grouping: Grouping,
    subset: Subset,
    opts: &AnalysisOptions,
) -> Result<GroupingResult> {
    let mut unmatched = Vec::new();
    let mut rows: Vec<(&Embedding, String)> = Vec::new();
    for e in embeddings {
        let entry = parse_graph_id(&e.graph_id)
            .and_then(|(image, s)| manifest.get(image).map(|m| (m, s)));
        match entry {
            None => unmatched.push(e.graph_id.clone()),
            Some((m, s)) if subset.admits(s) => {
                rows.push((e, label_of(grouping, m.fluence_class, m.angle_class, s)))
            }
            Some(_) => {}
        }
    }
    if !unmatched.is_empty() {
        unmatched.sort();
        return Err(Error::UnmatchedIds(unmatched));
    }
    rows.sort_by(|a, b| a.0.graph_id.cmp(&b.0.graph_id));

    let distinct: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    if distinct.len() < 2 {
        return Err(Error::TooFewClusters(distinct.len()));
    }

    let x: Vec<Vec<f64>> = rows.iter().map(|(e, _)| e.values.to_vec()).collect();
    let labels: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
    let model = pca_fit(&x, opts.components)?;
    let projected = pca_project(&model, &x)?;
    let scored = match opts.space {
        DbiSpace::Projected => projected.clone(),
        DbiSpace::Embedding => x,
    };
    let points = LabeledPoints::new(scored, labels.clone())?;
    let name = format!("{grouping}_{subset}");
    let report = davies_bouldin(&points, &name)?;

    let scatter: Vec<ScatterPoint> = rows
        .iter()
        .zip(&projected)
        .map(|((e, label), y)| ScatterPoint {
            graph_id: e.graph_id.clone(),
            label: label.clone(),
            pc1: y[0],
            pc2: y.get(1).copied().unwrap_or(0.0),
        })
        .collect();
    let mut by_label: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    for p in &scatter {
        by_label.entry(p.label.clone()).or_default().push((p.pc1, p.pc2));
    }
    let hulls = by_label
        .into_iter()
        .map(|(label, pts)| (label, convex_hull(&pts)))
        .collect();

    Ok(GroupingResult {
        grouping,
        subset,
        space: opts.space,
        report,
        pca: model,
        scatter,
        hulls,
    })
}

/// DBI of `trials` random relabellings of the same points (label counts
/// preserved), drawn from a seeded stream.
pub fn shuffle_baseline(p: &LabeledPoints, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = p.labels.clone();
    (0..trials)
        .map(|_| {
            labels.shuffle(&mut rng);
            let shuffled = LabeledPoints::new(p.points.clone(), labels.clone())?;
            Ok(davies_bouldin(&shuffled, "shuffled")?.dbi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HIDDEN;
    use crate::manifest::ManifestEntry;

    fn manifest(ids: &[(&str, u8, u8)]) -> CorpusManifest {
        let entries = ids
            .iter()
            .map(|&(id, f, a)| ManifestEntry {
                image_id: id.into(),
                path: format!("{id}.pgm").into(),
                fluence_class: f,
                angle_class: a,
                structure: Structure::Wall,
            })
            .collect();
        CorpusManifest::new(entries, ".").unwrap()
    }

    fn emb(id: &str, seed: f64) -> Embedding {
        let mut values = [0.0; HIDDEN];
        for (i, v) in values.iter_mut().enumerate() {
            *v = (seed * (i as f64 + 1.0)).sin().abs();
        }
        Embedding {
            graph_id: id.into(),
            values,
        }
    }

    #[test]
    fn graph_id_roundtrip() {
        let id = graph_id("img_01", Structure::Hole);
        assert_eq!(id, "img_01:hole");
        assert_eq!(parse_graph_id(&id), Some(("img_01", Structure::Hole)));
        assert_eq!(parse_graph_id("nocolon"), None);
    }

    #[test]
    fn structure_grouping_has_two_clusters() {
        let m = manifest(&[("a", 1, 1), ("b", 2, 2), ("c", 3, 3)]);
        let embs: Vec<_> = ["a", "b", "c"]
            .iter()
            .enumerate()
            .flat_map(|(i, id)| {
                [
                    emb(&graph_id(id, Structure::Wall), i as f64 + 0.5),
                    emb(&graph_id(id, Structure::Hole), i as f64 + 7.0),
                ]
            })
            .collect();
        let r = run_grouping_analysis(&embs, &m, Grouping::Structure, Subset::Both, &AnalysisOptions::default())
            .unwrap();
        assert_eq!(r.report.k, 2);
        assert_eq!(r.scatter.len(), 6);
        let json: serde_json::Value = serde_json::from_str(&r.report_json()).unwrap();
        assert_eq!(json["K"], 2);
        assert_eq!(json["grouping"], "structure");
        assert!(r.scatter_csv().starts_with("graph_id,label,pc1,pc2\na:hole,hole,"));
        assert!(r.svg().contains("<polygon"));
    }

    #[test]
    fn single_class_subset_fails() {
        let m = manifest(&[("a", 1, 1), ("b", 1, 2)]);
        let embs = vec![emb("a:wall", 1.0), emb("b:wall", 2.0)];
        let err = run_grouping_analysis(&embs, &m, Grouping::Fluence, Subset::Walls, &AnalysisOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::TooFewClusters(1)));
    }

    #[test]
    fn unmatched_ids_are_listed() {
        let m = manifest(&[("a", 1, 1)]);
        let embs = vec![emb("a:wall", 1.0), emb("zz:wall", 2.0), emb("bad", 3.0)];
        match run_grouping_analysis(&embs, &m, Grouping::Angle, Subset::Both, &AnalysisOptions::default()) {
            Err(Error::UnmatchedIds(ids)) => assert_eq!(ids, vec!["bad", "zz:wall"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_enums() {
        assert_eq!("angle".parse::<Grouping>().unwrap(), Grouping::Angle);
        assert_eq!("holes".parse::<Subset>().unwrap(), Subset::Holes);
        assert_eq!("embedding".parse::<DbiSpace>().unwrap(), DbiSpace::Embedding);
        assert!("x".parse::<Subset>().is_err());
    }
}
