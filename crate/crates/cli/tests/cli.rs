use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use astnat::jit::{write_commits, CommitRecord};
use astnat::seed::rng_for;
use astnat::tree::generate::{generate_corpus, generate_source, GenConfig};
use astnat::tree::io::{read_trees, write_trees};
use astnat::tree::{deserialize_tree, AstTree};
use rand::Rng;

fn astnat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_astnat")).args(args).output().expect("spawn astnat")
}

fn ok(args: &[&str]) -> String {
    let out = astnat(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every output file's bytes; the manifest without its wall-time line.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let name = e.file_name().to_string_lossy().into_owned();
            let mut bytes = fs::read(e.path()).unwrap();
            if name == "manifest.txt" {
                let text = String::from_utf8(bytes).unwrap();
                bytes = text.lines().filter(|l| !l.starts_with("wall_time_ms=")).collect::<Vec<_>>().join("\n").into();
            }
            (name, bytes)
        })
        .collect();
    files.sort();
    files
}

fn manifest(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest.txt")).unwrap()
}

/// Runs `args` twice into `a` and `b` (appended as `--out`) and checks the
/// outputs match byte for byte.
fn deterministic(args: &[&str], a: &Path, b: &Path) {
    let mut x = args.to_vec();
    x.extend(["--out", s(a)]);
    ok(&x);
    let mut y = args.to_vec();
    y.extend(["--out", s(b)]);
    ok(&y);
    let (sa, sb) = (snapshot(a), snapshot(b));
    assert!(sa.len() > 1);
    assert_eq!(sa, sb, "{args:?} is not reproducible");
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }
}

const QUICK: &str = "epochs = 2\nembed_dim = 12\nhidden_dim = 8\nhead_dim = 6\nngram_order = 2\n";

fn memorizable_corpus(f: &Fixture) -> PathBuf {
    let trees: Vec<AstTree> = (0..50)
        .map(|i| {
            let t = i % 10;
            deserialize_tree(&format!("(R{t} (A{t} \"u{t}\" \"u{t}\") (B{t} \"v{t}\" \"v{t}\"))")).unwrap()
        })
        .collect();
    let p = f.path("memo.trees");
    write_trees(&p, &trees).unwrap();
    p
}

/// Flat trees with 2 to 20 leaves, so every sweep limit keeps some.
fn varied_corpus(f: &Fixture) -> PathBuf {
    let mut rng = rng_for(5, "varied", 0);
    let trees: Vec<AstTree> = (0..120)
        .map(|_| {
            let n = rng.random_range(2..=20);
            let toks: Vec<String> = (0..n).map(|_| format!("\"t{}\"", rng.random_range(0..6))).collect();
            let inner = rng.random_range(0..3);
            deserialize_tree(&format!("(R (S{inner} {}) \"end\")", toks.join(" "))).unwrap()
        })
        .collect();
    let p = f.path("varied.trees");
    write_trees(&p, &trees).unwrap();
    p
}

#[test]
fn gen_corpus_is_reproducible_and_reports_stats() {
    let f = Fixture::new();
    let (a, b) = (f.path("a"), f.path("b"));
    deterministic(&["gen-corpus", "--size", "100", "--seed", "7"], &a, &b);
    let stdout = ok(&["gen-corpus", "--size", "100", "--seed", "7", "--out", s(&f.path("c"))]);
    assert!(stdout.starts_with("trees=100 "), "{stdout}");
    let trees = read_trees(&a.join("corpus.trees")).unwrap();
    assert_eq!(trees.len(), 100);
    let mean = trees.iter().map(|t| t.leaf_count()).sum::<usize>() as f64 / 100.0;
    let reported: f64 =
        stdout.split_whitespace().find_map(|kv| kv.strip_prefix("mean_leaves=")).unwrap().parse().unwrap();
    assert!((reported - mean).abs() < 1e-4);
    assert!(manifest(&a).contains("status=ok\n"));
    assert!(manifest(&a).contains("config.size=100\n"));
}

#[test]
fn ingest_stats_and_zipf_are_reproducible() {
    let f = Fixture::new();
    let mut rng = rng_for(1, "sources", 0);
    let cfg = GenConfig::default();
    let unit_a: String = (0..3).map(|_| generate_source(&mut rng, &cfg) + "\n").collect();
    let unit_b: String = (0..2).map(|_| generate_source(&mut rng, &cfg) + "\n").collect();
    let (pa, pb) = (f.write("a.toy", &unit_a), f.write("b.toy", &unit_b));
    deterministic(&["ingest", s(&pa), s(&pb)], &f.path("i1"), &f.path("i2"));
    let trees = read_trees(&f.path("i1").join("corpus.trees")).unwrap();
    assert_eq!(trees.len(), 5);
    assert_eq!(trees[3].source_id, "b.toy#0");

    let bad = f.write("bad.toy", "fn (");
    let out = astnat(&["ingest", s(&bad), "--out", s(&f.path("i3"))]);
    assert_eq!(out.status.code(), Some(1));

    ok(&["gen-corpus", "--size", "80", "--seed", "1", "--out", s(&f.path("g1"))]);
    ok(&["gen-corpus", "--size", "80", "--seed", "2", "--out", s(&f.path("g2"))]);
    let c1 = f.path("g1").join("corpus.trees");
    let c2 = f.path("g2").join("corpus.trees");
    deterministic(&["stats", "--trees", s(&c1), "--k", "25"], &f.path("s1"), &f.path("s2"));
    deterministic(&["zipf", "--trees", s(&c1), "--defective", s(&c2)], &f.path("z1"), &f.path("z2"));
    let w = fs::read_to_string(f.path("z1").join("wilcoxon.csv")).unwrap();
    assert!(w.starts_with("n,statistic,w_plus,p_value,exact,excluded_labels\n"));
}

#[test]
fn entropy_summary_has_five_folds_and_a_mean() {
    let f = Fixture::new();
    let corpus = memorizable_corpus(&f);
    let cfg = f.write("quick.cfg", QUICK);
    deterministic(
        &["entropy", "--config", s(&cfg), "--trees", s(&corpus), "--seed", "3"],
        &f.path("e1"),
        &f.path("e2"),
    );
    let summary = fs::read_to_string(f.path("e1").join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[..5].iter().enumerate().all(|(i, r)| r.starts_with(&format!("treelstm,20,{i},"))));
    assert!(rows[5].starts_with("treelstm,20,mean,"));
    let report = fs::read_to_string(f.path("e1").join("report.csv")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("ngram-2,")).count(), 5);
}

#[test]
fn sweep_plot_has_one_row_per_limit() {
    let f = Fixture::new();
    let corpus = varied_corpus(&f);
    let cfg = f.write("quick.cfg", &format!("{QUICK}triviality = off\n"));
    deterministic(
        &["sweep", "--config", s(&cfg), "--trees", s(&corpus), "--ks", "8,12,16,20"],
        &f.path("w1"),
        &f.path("w2"),
    );
    let plot = fs::read_to_string(f.path("w1").join("plot.csv")).unwrap();
    let ks: Vec<&str> = plot.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ks, ["8", "12", "16", "20"]);
    let out = astnat(&["sweep", "--trees", s(&corpus), "--ks", "12,8", "--out", s(&f.path("w3"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_embed_and_jit_from_commit_files() {
    let f = Fixture::new();
    let methods = generate_corpus(120, 9, &GenConfig { max_leaves: Some(30), ..GenConfig::default() });
    let mtrees = f.path("methods.trees");
    write_trees(&mtrees, &methods).unwrap();
    let cfg = f.write("quick.cfg", &format!("{QUICK}n_trees = 15\n"));
    deterministic(&["train", "--config", s(&cfg), "--trees", s(&mtrees), "--k", "30"], &f.path("t1"), &f.path("t2"));
    let (ck, vocab) = (f.path("t1").join("checkpoint.bin"), f.path("t1").join("vocab.txt"));
    deterministic(
        &["embed", "--trees", s(&mtrees), "--checkpoint", s(&ck), "--vocab", s(&vocab)],
        &f.path("m1"),
        &f.path("m2"),
    );
    let emb = fs::read_to_string(f.path("m1").join("embeddings.csv")).unwrap();
    assert_eq!(emb.lines().count(), 121);
    assert_eq!(emb.lines().nth(1).unwrap().split(',').count(), 2 + 8);

    let mut rng = rng_for(2, "commits", 0);
    let commits: Vec<CommitRecord> = (0..60)
        .map(|c| CommitRecord {
            commit_id: format!("c{c:03}"),
            timestamp: 1000 + c as i64,
            methods: (0..2).map(|m| (format!("c{c}.m{m}"), methods[2 * c + m].clone())).collect(),
            label: rng.random_bool(0.3),
            provenance: "test".into(),
        })
        .collect();
    let (cp, tp) = (f.path("commits.tsv"), f.path("commit_methods.trees"));
    write_commits(&cp, &tp, &commits).unwrap();
    let args = ["jit", "--config", s(&cfg), "--commits", s(&cp), "--trees", s(&tp), "--checkpoint", s(&ck)];
    let mut with_vocab = args.to_vec();
    with_vocab.extend(["--vocab", s(&vocab)]);
    deterministic(&with_vocab, &f.path("j1"), &f.path("j2"));
    assert_eq!(fs::read_to_string(f.path("j1").join("metrics.csv")).unwrap().lines().count(), 13);

    // a checkpoint trained at another k is rejected
    let (j3, j4) = (f.path("j3"), f.path("j4"));
    let mut mismatch = with_vocab.clone();
    mismatch.extend(["--k", "20", "--out", s(&j3)]);
    let out = astnat(&mismatch);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k=30"));
    // missing --vocab is a usage problem
    let mut missing = args.to_vec();
    missing.extend(["--out", s(&j4)]);
    assert_eq!(astnat(&missing).status.code(), Some(2));
}

#[test]
fn synthetic_jit_emits_twelve_rows() {
    let f = Fixture::new();
    let cfg = f.write("jit.cfg", "n_trees = 25\n");
    deterministic(&["jit", "--synthetic", "--config", s(&cfg), "--seed", "4"], &f.path("a"), &f.path("b"));
    let csv = fs::read_to_string(f.path("a").join("metrics.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows.iter().filter(|r| r.starts_with("overall,")).count(), 2);
    assert_eq!(rows.iter().filter(|r| r.contains(",true,")).count(), 6);
    let one = astnat(&["jit", "--synthetic", "--undersample", "on", "--config", s(&cfg), "--out", s(&f.path("c"))]);
    assert!(one.status.success());
    assert_eq!(fs::read_to_string(f.path("c").join("metrics.csv")).unwrap().lines().count(), 7);
}

#[test]
fn failures_exit_with_one_line_and_a_manifest() {
    let f = Fixture::new();
    let missing = f.path("none.trees");
    let out = astnat(&["stats", "--trees", s(&missing), "--out", s(&f.path("x"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: code=2 command=stats message="));
    let m = manifest(&f.path("x"));
    assert!(m.contains("status=error\n") && m.contains("exit_code=2\n"));

    let bad_cfg = f.write("bad.cfg", "colour = blue\n");
    let out = astnat(&["gen-corpus", "--config", s(&bad_cfg), "--out", s(&f.path("y"))]);
    assert_eq!(out.status.code(), Some(2));

    let broken = f.write("broken.trees", "(R \"a\"\n");
    let out = astnat(&["stats", "--trees", s(&broken), "--out", s(&f.path("z"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8(out.stderr).unwrap().lines().count(), 1);
    assert!(manifest(&f.path("z")).contains("exit_code=1\n"));

    assert_eq!(astnat(&["train"]).status.code(), Some(2));
    assert_eq!(astnat(&["gen-corpus", "--size", "0", "--out", s(&f.path("w"))]).status.code(), Some(2));
}

#[test]
fn inputs_are_not_modified() {
    let f = Fixture::new();
    let corpus = memorizable_corpus(&f);
    let before = fs::read(&corpus).unwrap();
    ok(&["zipf", "--trees", s(&corpus), "--out", s(&f.path("z"))]);
    ok(&["stats", "--trees", s(&corpus), "--out", s(&f.path("s"))]);
    assert_eq!(fs::read(&corpus).unwrap(), before);
}
