use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use astnat::eval::{
    cross_validate, fold_summary_csv, length_sweep, ngram_baseline, plot_csv, report_csv, summary_csv, SweepPoint,
};
use astnat::jit::{
    featurize, metrics_csv, read_commits, run_jit_vectors, sort_chronologically, synthetic_vectors, JitConfig,
    SyntheticJit,
};
use astnat::lm::{embed, train, ModelCheckpoint, TrainConfig};
use astnat::stats::{compare_populations, fit_zipf, rank_frequencies};
use astnat::tree::generate::{generate_corpus, GenConfig};
use astnat::tree::io::{read_trees, sidecar_path, write_trees};
use astnat::tree::{filter_corpus, parse_toy_unit, AstTree, TrivialityRule, Vocabulary};

use crate::config::{Config, ConfigError};

/// Files a command writes, recorded by name for the manifest.
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.path(name), contents).with_context(|| format!("writing {name}"))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn trees(&mut self, name: &str, trees: &[AstTree]) -> Result<()> {
        let path = self.path(name);
        write_trees(&path, trees)?;
        self.files.push(name.to_string());
        if sidecar_path(&path).exists() {
            self.files.push(format!("{name}.ids"));
        }
        Ok(())
    }
}

/// A failure either in the configuration (exit 2) or while running (exit 1).
pub enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

pub fn require_file(path: &Path, what: &str) -> std::result::Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Config(format!("{what} `{}` does not exist", path.display())))
    }
}

fn load_trees(path: &Path) -> Result<Vec<AstTree>> {
    read_trees(path).with_context(|| format!("reading {}", path.display()))
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Vocabulary::from_text(&text)?)
}

fn triviality(cfg: &mut Config) -> std::result::Result<TrivialityRule, ConfigError> {
    let mode: String = cfg.get("triviality", "degenerate".to_string())?;
    match mode.as_str() {
        "off" => Ok(TrivialityRule::Disabled),
        "degenerate" => {
            let TrivialityRule::Degenerate { chain_ratio, root_dominance } = TrivialityRule::default() else {
                unreachable!()
            };
            Ok(TrivialityRule::Degenerate {
                chain_ratio: cfg.get("chain_ratio", chain_ratio)?,
                root_dominance: cfg.get("root_dominance", root_dominance)?,
            })
        }
        other => Err(ConfigError(format!("triviality must be `degenerate` or `off`, found `{other}`"))),
    }
}

fn train_config(cfg: &mut Config, seed: u64) -> std::result::Result<TrainConfig, ConfigError> {
    let d = TrainConfig::default();
    let tc = TrainConfig {
        learning_rate: cfg.get("learning_rate", d.learning_rate)?,
        weight_decay: cfg.get("weight_decay", d.weight_decay)?,
        batch_size: cfg.get("batch_size", d.batch_size)?,
        epochs: cfg.get("epochs", d.epochs)?,
        seed,
        adam_beta1: cfg.get("adam_beta1", d.adam_beta1)?,
        adam_beta2: cfg.get("adam_beta2", d.adam_beta2)?,
        adam_eps: cfg.get("adam_eps", d.adam_eps)?,
        decoupled_weight_decay: cfg.get("decoupled_weight_decay", d.decoupled_weight_decay)?,
        embed_dim: cfg.get("embed_dim", d.embed_dim)?,
        hidden_dim: cfg.get("hidden_dim", d.hidden_dim)?,
        head_dim: cfg.get("head_dim", d.head_dim)?,
    };
    tc.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(tc)
}

fn corpus_stats(trees: &[AstTree]) -> Result<String> {
    let vocab = Vocabulary::build(trees)?;
    let n = trees.len();
    let leaves: usize = trees.iter().map(AstTree::leaf_count).sum();
    let nodes: usize = trees.iter().map(AstTree::len).sum();
    let max_leaves = trees.iter().map(AstTree::leaf_count).max().unwrap_or(0);
    let mean_depth = trees.iter().map(|t| t.depth() as f64).sum::<f64>() / n as f64;
    Ok(format!(
        "trees,mean_leaves,mean_nodes,mean_depth,max_leaves,vocab_size\n{n},{:.4},{:.4},{:.4},{max_leaves},{}\n",
        leaves as f64 / n as f64,
        nodes as f64 / n as f64,
        mean_depth,
        vocab.len()
    ))
}

fn print_stats(csv: &str) {
    let mut lines = csv.lines();
    let (head, row) = (lines.next().unwrap_or(""), lines.next().unwrap_or(""));
    let pairs: Vec<String> = head.split(',').zip(row.split(',')).map(|(k, v)| format!("{k}={v}")).collect();
    println!("{}", pairs.join(" "));
}

pub fn gen_corpus(cfg: &mut Config, out: &mut Outputs) -> CmdResult {
    let seed = cfg.get("seed", 0u64)?;
    let size = cfg.get("size", 100usize)?;
    if size == 0 {
        return Err(Failure::Config("size must be at least 1".into()));
    }
    let d = GenConfig::default();
    let max_leaves = cfg.get("max_leaves", 0usize)?;
    let gen = GenConfig {
        max_statements: cfg.get("max_statements", d.max_statements)?,
        max_block_depth: cfg.get("max_block_depth", d.max_block_depth)?,
        max_expr_depth: cfg.get("max_expr_depth", d.max_expr_depth)?,
        max_leaves: (max_leaves > 0).then_some(max_leaves),
        zipf_exponent: cfg.get("zipf_exponent", d.zipf_exponent)?,
    };
    if gen.max_statements == 0 || !(gen.zipf_exponent >= 0.0) {
        return Err(Failure::Config("max_statements must be positive and zipf_exponent non-negative".into()));
    }
    if gen.max_leaves.is_some_and(|m| m < 4) {
        return Err(Failure::Config("max_leaves below 4 admits no program".into()));
    }
    let trees = generate_corpus(size, seed, &gen);
    out.trees("corpus.trees", &trees)?;
    let stats = corpus_stats(&trees)?;
    out.write("corpus_stats.csv", &stats)?;
    print_stats(&stats);
    Ok(())
}

pub fn ingest(inputs: &[PathBuf], out: &mut Outputs) -> CmdResult {
    if inputs.is_empty() {
        return Err(Failure::Config("no input files".into()));
    }
    for p in inputs {
        require_file(p, "input")?;
    }
    let mut trees = Vec::new();
    for p in inputs {
        let src = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        let unit = parse_toy_unit(&src).with_context(|| format!("parsing {}", p.display()))?;
        trees.extend(unit.into_iter().enumerate().map(|(i, t)| t.with_source_id(format!("{name}#{i}"))));
    }
    out.trees("corpus.trees", &trees)?;
    let stats = corpus_stats(&trees)?;
    out.write("corpus_stats.csv", &stats)?;
    print_stats(&stats);
    Ok(())
}

pub fn stats(cfg: &mut Config, trees_path: &Path, out: &mut Outputs) -> CmdResult {
    let k = cfg.get("k", 20usize)?;
    let rule = triviality(cfg)?;
    let trees = load_trees(trees_path)?;
    if trees.is_empty() {
        return Err(Failure::Runtime(anyhow::anyhow!("corpus is empty")));
    }
    let kept = filter_corpus(&trees, k, rule);
    let base = corpus_stats(&trees)?;
    let (head, row) = base.trim_end().split_once('\n').expect("header and row");
    let csv = format!("{head},k,kept_at_k\n{row},{k},{}\n", kept.len());
    out.write("stats.csv", &csv)?;
    out.write("vocab.txt", Vocabulary::build(&trees).map_err(anyhow::Error::from)?.to_text())?;
    print_stats(&csv);
    Ok(())
}

pub fn zipf(cfg: &mut Config, trees_path: &Path, defective: Option<&Path>, out: &mut Outputs) -> CmdResult {
    let inner_only = cfg.get("inner_only", true)?;
    let drop_singletons = cfg.get("drop_singletons", true)?;
    if let Some(d) = defective {
        require_file(d, "defective corpus")?;
    }
    let trees = load_trees(trees_path)?;
    let table = rank_frequencies(&trees, inner_only).map_err(anyhow::Error::from)?;
    out.write("ranks.csv", table.to_csv())?;
    let fit = fit_zipf(&table, drop_singletons).map_err(anyhow::Error::from)?;
    out.write("zipf_fit.csv", fit.to_csv())?;
    println!("slope={:.6} r_squared={:.6} points={}", fit.slope, fit.r_squared, fit.points_used);
    if let Some(d) = defective {
        let def = load_trees(d)?;
        let cmp = compare_populations(&def, &trees, inner_only).map_err(anyhow::Error::from)?;
        let t = cmp.test;
        out.write(
            "wilcoxon.csv",
            format!(
                "n,statistic,w_plus,p_value,exact,excluded_labels\n{},{},{},{:e},{},{}\n",
                t.n,
                t.statistic,
                t.w_plus,
                t.p_value,
                t.exact,
                cmp.excluded.len()
            ),
        )?;
        println!("wilcoxon n={} statistic={} p_value={:e}", t.n, t.statistic, t.p_value);
    }
    Ok(())
}

fn corpus_vocab(vocab: Option<&Path>, trees: &[AstTree]) -> Result<Vocabulary> {
    match vocab {
        Some(p) => load_vocab(p),
        None => Ok(Vocabulary::build(trees)?),
    }
}

pub fn train_cmd(cfg: &mut Config, trees_path: &Path, vocab: Option<&Path>, out: &mut Outputs) -> CmdResult {
    let seed = cfg.get("seed", 0u64)?;
    let k = cfg.get("k", 20usize)?;
    let rule = triviality(cfg)?;
    let tc = train_config(cfg, seed)?;
    if let Some(v) = vocab {
        require_file(v, "vocabulary")?;
    }
    let trees = filter_corpus(&load_trees(trees_path)?, k, rule);
    if trees.is_empty() {
        return Err(Failure::Runtime(anyhow::anyhow!("no trees left after filtering at k={k}")));
    }
    let vocab = corpus_vocab(vocab, &trees)?;
    let outcome = train(&trees, &vocab, &tc, k).map_err(anyhow::Error::from)?;
    let mut losses = String::from("epoch,loss_nats\n");
    for (e, l) in outcome.epoch_losses.iter().enumerate() {
        let _ = writeln!(losses, "{e},{l:.9}");
    }
    out.write("checkpoint.bin", outcome.checkpoint.to_bytes())?;
    out.write("vocab.txt", vocab.to_text())?;
    out.write("losses.csv", losses)?;
    let last = outcome.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!("trees={} vocab={} final_loss_bits={:.4}", trees.len(), vocab.len(), last / std::f64::consts::LN_2);
    Ok(())
}

pub fn entropy(cfg: &mut Config, trees_path: &Path, vocab: Option<&Path>, out: &mut Outputs) -> CmdResult {
    let seed = cfg.get("seed", 0u64)?;
    let k = cfg.get("k", 20usize)?;
    let folds = cfg.get("folds", 5usize)?;
    let order = cfg.get("ngram_order", 3usize)?;
    let rule = triviality(cfg)?;
    let tc = train_config(cfg, seed)?;
    if let Some(v) = vocab {
        require_file(v, "vocabulary")?;
    }
    let trees = filter_corpus(&load_trees(trees_path)?, k, rule);
    let vocab = corpus_vocab(vocab, &trees)?;
    let report = cross_validate(&trees, &vocab, &tc, k, folds).map_err(anyhow::Error::from)?;
    let mut reports = vec![report.clone()];
    if order > 0 {
        reports.push(ngram_baseline(&trees, &vocab, order, folds, seed, k).map_err(anyhow::Error::from)?);
    }
    out.write("report.csv", report_csv(&reports.iter().collect::<Vec<_>>()))?;
    out.write("summary.csv", fold_summary_csv(&report))?;
    if let Some(ng) = reports.get(1) {
        out.write("ngram_summary.csv", fold_summary_csv(ng))?;
    }
    for r in &reports {
        println!("{} k={} mean_bits={:.4} std_bits={:.4}", r.model_tag, r.k, r.mean, r.std);
    }
    Ok(())
}

pub fn sweep(cfg: &mut Config, trees_path: &Path, vocab: Option<&Path>, out: &mut Outputs) -> CmdResult {
    let seed = cfg.get("seed", 0u64)?;
    let ks = cfg.get_list("ks", "20,25,30,35,40,50,60")?;
    let folds = cfg.get("folds", 5usize)?;
    let rule = triviality(cfg)?;
    let tc = train_config(cfg, seed)?;
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Config("ks must be ascending".into()));
    }
    if let Some(v) = vocab {
        require_file(v, "vocabulary")?;
    }
    let trees = load_trees(trees_path)?;
    let vocab = corpus_vocab(vocab, &trees)?;
    let points = length_sweep(&trees, &vocab, &tc, &ks, folds, rule).map_err(anyhow::Error::from)?;
    let reports: Vec<_> = points
        .iter()
        .filter_map(|p| match p {
            SweepPoint::Report(r) => Some(r),
            SweepPoint::Gap { .. } => None,
        })
        .collect();
    out.write("sweep_report.csv", report_csv(&reports))?;
    out.write("sweep_summary.csv", summary_csv("treelstm", &points))?;
    out.write("plot.csv", plot_csv(&points))?;
    for p in &points {
        match p {
            SweepPoint::Report(r) => println!("k={} mean_bits={:.4} std_bits={:.4}", r.k, r.mean, r.std),
            SweepPoint::Gap { k, n_trees } => println!("k={k} gap trees={n_trees}"),
        }
    }
    Ok(())
}

pub fn embed_cmd(trees_path: &Path, checkpoint: &Path, vocab: &Path, out: &mut Outputs) -> CmdResult {
    require_file(checkpoint, "checkpoint")?;
    require_file(vocab, "vocabulary")?;
    let trees = load_trees(trees_path)?;
    let ck = ModelCheckpoint::load(checkpoint).map_err(anyhow::Error::from)?;
    let vocab = load_vocab(vocab)?;
    let width = ck.dims().hidden;
    let mut csv = String::from("index,source_id");
    for d in 0..width {
        let _ = write!(csv, ",h{d}");
    }
    csv.push('\n');
    for (i, t) in trees.iter().enumerate() {
        let h = embed(t, &ck, &vocab).map_err(anyhow::Error::from)?;
        let _ = write!(csv, "{i},{}", t.source_id);
        for v in h {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    out.write("embeddings.csv", csv)?;
    println!("trees={} width={width}", trees.len());
    Ok(())
}

pub struct JitInputs<'a> {
    pub commits: Option<&'a Path>,
    pub trees: Option<&'a Path>,
    pub checkpoint: Option<&'a Path>,
    pub vocab: Option<&'a Path>,
    pub synthetic: bool,
}

pub fn jit(cfg: &mut Config, inputs: JitInputs<'_>, out: &mut Outputs) -> CmdResult {
    let seed = cfg.get("seed", 0u64)?;
    let mode: String = cfg.get("undersample", "both".to_string())?;
    let settings: &[bool] = match mode.as_str() {
        "off" | "false" => &[false],
        "on" | "true" => &[true],
        "both" => &[false, true],
        other => return Err(Failure::Config(format!("undersample must be on, off or both, found `{other}`"))),
    };
    let base = JitConfig {
        folds: cfg.get("jit_folds", 5usize)?,
        k: cfg.get("k", 30usize)?,
        n_trees: cfg.get("n_trees", 200usize)?,
        enn_k: cfg.get("enn_k", 3usize)?,
        undersample: false,
        seed,
    };
    let vectors = if inputs.synthetic {
        let d = SyntheticJit::default();
        let syn = SyntheticJit {
            commits: cfg.get("synthetic_commits", d.commits)?,
            dim: cfg.get("synthetic_dim", d.dim)?,
            imbalance: cfg.get("synthetic_imbalance", d.imbalance)?,
            shift: cfg.get("synthetic_shift", d.shift)?,
            latent: cfg.get("synthetic_latent", d.latent)?,
            noise: cfg.get("synthetic_noise", d.noise)?,
            max_methods: cfg.get("synthetic_max_methods", d.max_methods)?,
            ..d
        };
        if syn.latent > syn.dim || syn.max_methods == 0 || syn.dim == 0 {
            return Err(Failure::Config("synthetic corpus needs 0 < latent <= dim and max_methods > 0".into()));
        }
        synthetic_vectors(&syn, seed)
    } else {
        let (Some(c), Some(t), Some(ck), Some(v)) = (inputs.commits, inputs.trees, inputs.checkpoint, inputs.vocab)
        else {
            return Err(Failure::Config(
                "jit needs --synthetic or --commits, --trees, --checkpoint and --vocab".into(),
            ));
        };
        for (p, what) in [(c, "commit corpus"), (t, "method trees"), (ck, "checkpoint"), (v, "vocabulary")] {
            require_file(p, what)?;
        }
        let mut commits = read_commits(c, t).map_err(anyhow::Error::from)?;
        sort_chronologically(&mut commits);
        let checkpoint = ModelCheckpoint::load(ck).map_err(anyhow::Error::from)?;
        featurize(&commits, &checkpoint, &load_vocab(v)?, base.k).map_err(anyhow::Error::from)?
    };
    let mut rows = Vec::new();
    for &us in settings {
        rows.extend(
            run_jit_vectors(&vectors, &JitConfig { undersample: us, ..base.clone() }).map_err(anyhow::Error::from)?,
        );
    }
    out.write("metrics.csv", metrics_csv(&rows))?;
    for r in rows.iter().filter(|r| r.fold == astnat::jit::FoldId::Overall) {
        let m = &r.metrics;
        println!(
            "undersampled={} f1={:.4} recall={:.4} precision={:.4} mcc={:.4}",
            r.undersampled, m.f1, m.recall, m.precision, m.mcc
        );
    }
    Ok(())
}
