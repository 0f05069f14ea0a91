use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn skelgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skelgraph"))
        .args(args)
        .env_remove("SKELGRAPH_OUT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = skelgraph(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn same_file(a: &Path, b: &Path) {
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{} vs {}", a.display(), b.display());
}

fn small_corpus(dir: &Path) -> PathBuf {
    let corpus = dir.join("corpus");
    ok(&["synth", "--out", s(&corpus), "--replicates", "1", "--size", "64"]);
    corpus.join("manifest.csv")
}

#[test]
fn stages_compose_to_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_corpus(tmp.path());
    let run = tmp.path().join("run");
    let stdout = ok(&["pipeline", "--manifest", s(&manifest), "--out", s(&run)]).stdout;
    assert_eq!(String::from_utf8(stdout).unwrap().lines().count(), 7);

    let staged = tmp.path().join("staged");
    for d in ["binary", "skeleton", "graphs", "overlays"] {
        fs::create_dir_all(staged.join(d)).unwrap();
    }
    let text = fs::read_to_string(&manifest).unwrap();
    let mut graphs = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let (id, path) = (fields[0], manifest.parent().unwrap().join(fields[1]));
        let bin = staged.join(format!("binary/{id}.pgm"));
        ok(&["preprocess", "--input", s(&path), "--output", s(&bin)]);
        for (structure, invert) in [("wall", false), ("hole", true)] {
            let skel = staged.join(format!("skeleton/{id}_{structure}.pgm"));
            let mut args = vec!["skeletonize", "--input", s(&bin), "--output", s(&skel)];
            if invert {
                args.push("--invert");
            }
            ok(&args);
            let graph = staged.join(format!("graphs/{id}_{structure}.json"));
            let mut args = vec!["graph", "--input", s(&skel), "--output", s(&graph)];
            let overlay = staged.join(format!("overlays/{id}_{structure}.png"));
            if !invert {
                args.extend(["--overlay", s(&overlay), "--binary", s(&bin)]);
            }
            ok(&args);
            graphs.push(graph);
        }
    }
    let embeddings = staged.join("embeddings.csv");
    let weights = staged.join("weights.json");
    let mut args = vec!["embed", "--output", s(&embeddings), "--weights-out", s(&weights), "--graphs"];
    args.extend(graphs.iter().map(|g| s(g)));
    ok(&args);
    ok(&["analyze", "--embeddings", s(&embeddings), "--manifest", s(&manifest), "--out", s(&staged)]);

    let mut compared = 0;
    for sub in ["binary", "skeleton", "graphs", "overlays", "analysis"] {
        for entry in fs::read_dir(staged.join(sub)).unwrap() {
            let p = entry.unwrap().path();
            same_file(&p, &run.join(sub).join(p.file_name().unwrap()));
            compared += 1;
        }
    }
    same_file(&embeddings, &run.join("embeddings.csv"));
    same_file(&weights, &run.join("weights.json"));
    // 9 binaries, 18 skeletons, 18 graphs, 9 overlays, 7 analyses × 3 files.
    assert_eq!(compared, 9 + 18 + 18 + 9 + 21);
}

#[test]
fn reruns_are_identical_and_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = small_corpus(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["pipeline", "--manifest", s(&manifest), "--out", s(&a)]);
    ok(&["pipeline", "--manifest", s(&manifest), "--out", s(&b)]);
    same_file(&a.join("run_summary.json"), &b.join("run_summary.json"));
    ok(&["verify", "--out", s(&a)]);

    fs::write(a.join("embeddings.csv"), "tampered").unwrap();
    let out = skelgraph(&["verify", "--out", s(&a)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("embeddings.csv"));
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("env_corpus");
    let out = Command::new(env!("CARGO_BIN_EXE_skelgraph"))
        .args(["synth", "--replicates", "1", "--size", "64"])
        .env("SKELGRAPH_OUT", &corpus)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(corpus.join("manifest.csv").exists());
}

#[test]
fn empty_manifest_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("manifest.csv");
    fs::write(&manifest, "image_id,path,fluence_class,angle_class,structure\n").unwrap();
    let out = skelgraph(&["pipeline", "--manifest", s(&manifest), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("no input"));
}

#[test]
fn line_graph_and_its_embedding() {
    let tmp = tempfile::tempdir().unwrap();
    let skel = tmp.path().join("line.pgm");
    fs::write(&skel, b"P2\n5 1\n255\n255 255 255 255 255\n").unwrap();
    let graph = tmp.path().join("line_wall.json");
    ok(&["graph", "--input", s(&skel), "--output", s(&graph)]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&graph).unwrap()).unwrap();
    assert_eq!(json["nodes"].as_array().unwrap().len(), 5);
    assert_eq!(json["edges"].as_array().unwrap().len(), 4);

    let csv = tmp.path().join("emb.csv");
    ok(&["embed", "--graphs", s(&graph), "--output", s(&csv), "--gcn-seed", "42"]);
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    let fields: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(fields[0], "line:wall");
    assert_eq!(fields.len(), 33);
    assert!(fields[1..].iter().all(|v| v.parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn bad_stem_and_missing_file_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = skelgraph(&["graph", "--input", s(&tmp.path().join("nope.pgm")), "--output", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.pgm"));

    let skel = tmp.path().join("dot.pgm");
    fs::write(&skel, b"P2\n2 1\n255\n255 255\n").unwrap();
    let graph = tmp.path().join("unlabelled.json");
    ok(&["graph", "--input", s(&skel), "--output", s(&graph)]);
    let out = skelgraph(&["embed", "--graphs", s(&graph), "--output", s(&tmp.path().join("e.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}
