//! `astnat`: corpus generation, statistics, tree-model training and
//! evaluation, and defect prediction from the command line.
//!
//! Every command writes its artifacts and a `manifest.txt` into `--out`.
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod commands;
mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::{CmdResult, Failure, JitInputs, Outputs};
use config::Config;

#[derive(Parser)]
#[command(name = "astnat", version, about = "Structured naturalness of ASTs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Key-value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a toy-language corpus.
    GenCorpus {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        size: Option<usize>,
    },
    /// Parse toy-language source files into a `.trees` corpus.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Corpus statistics and vocabulary.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Rank-frequency table, Zipf fit and optional population comparison.
    Zipf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trees: PathBuf,
        /// Second population compared against `--trees` with a Wilcoxon test.
        #[arg(long)]
        defective: Option<PathBuf>,
    },
    /// Train the tree model on trees with at most `k` leaves.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Cross-validated self-cross-entropy with an n-gram baseline.
    Entropy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Cross-entropy over a range of sequence-length limits.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trees: PathBuf,
        /// Comma-separated ascending limits.
        #[arg(long)]
        ks: Option<String>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Root embeddings of every tree.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
    },
    /// Longitudinal defect prediction.
    Jit {
        #[command(flatten)]
        common: Common,
        /// Commit corpus file.
        #[arg(long)]
        commits: Option<PathBuf>,
        /// Method trees referenced by the commit corpus.
        #[arg(long)]
        trees: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Use a synthetic embedding corpus instead of commit files.
        #[arg(long)]
        synthetic: bool,
        /// on, off or both.
        #[arg(long)]
        undersample: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenCorpus { .. } => "gen-corpus",
            Command::Ingest { .. } => "ingest",
            Command::Stats { .. } => "stats",
            Command::Zipf { .. } => "zipf",
            Command::Train { .. } => "train",
            Command::Entropy { .. } => "entropy",
            Command::Sweep { .. } => "sweep",
            Command::Embed { .. } => "embed",
            Command::Jit { .. } => "jit",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::GenCorpus { common, .. }
            | Command::Ingest { common, .. }
            | Command::Stats { common, .. }
            | Command::Zipf { common, .. }
            | Command::Train { common, .. }
            | Command::Entropy { common, .. }
            | Command::Sweep { common, .. }
            | Command::Embed { common, .. }
            | Command::Jit { common, .. } => common,
        }
    }

    fn inputs(&self) -> Vec<(&'static str, &Path)> {
        let v: Vec<(&'static str, Option<&PathBuf>)> = match self {
            Command::GenCorpus { .. } | Command::Ingest { .. } => vec![],
            Command::Stats { trees, .. } => vec![("trees", Some(trees))],
            Command::Zipf { trees, defective, .. } => vec![("trees", Some(trees)), ("defective", defective.as_ref())],
            Command::Train { trees, vocab, .. }
            | Command::Entropy { trees, vocab, .. }
            | Command::Sweep { trees, vocab, .. } => vec![("trees", Some(trees)), ("vocab", vocab.as_ref())],
            Command::Embed { trees, checkpoint, vocab, .. } => {
                vec![("trees", Some(trees)), ("checkpoint", Some(checkpoint)), ("vocab", Some(vocab))]
            }
            Command::Jit { commits, trees, checkpoint, vocab, .. } => vec![
                ("commits", commits.as_ref()),
                ("trees", trees.as_ref()),
                ("checkpoint", checkpoint.as_ref()),
                ("vocab", vocab.as_ref()),
            ],
        };
        v.into_iter().filter_map(|(n, p)| p.map(|p| (n, p.as_path()))).collect()
    }
}

fn apply_flags(cmd: &Command, cfg: &mut Config) -> Result<(), config::ConfigError> {
    cfg.flag("seed", cmd.common().seed)?;
    match cmd {
        Command::GenCorpus { size, .. } => cfg.flag("size", *size),
        Command::Stats { k, .. } | Command::Train { k, .. } => cfg.flag("k", *k),
        Command::Entropy { k, folds, .. } => {
            cfg.flag("k", *k)?;
            cfg.flag("folds", *folds)
        }
        Command::Sweep { ks, folds, .. } => {
            cfg.flag("ks", ks.as_deref())?;
            cfg.flag("folds", *folds)
        }
        Command::Jit { undersample, k, folds, .. } => {
            cfg.flag("undersample", undersample.as_deref())?;
            cfg.flag("k", *k)?;
            cfg.flag("jit_folds", *folds)
        }
        Command::Ingest { .. } | Command::Zipf { .. } | Command::Embed { .. } => Ok(()),
    }
}

fn dispatch(cmd: &Command, cfg: &mut Config, out: &mut Outputs) -> CmdResult {
    for (what, p) in cmd.inputs() {
        commands::require_file(p, what)?;
    }
    match cmd {
        Command::GenCorpus { .. } => commands::gen_corpus(cfg, out),
        Command::Ingest { inputs, .. } => commands::ingest(inputs, out),
        Command::Stats { trees, .. } => commands::stats(cfg, trees, out),
        Command::Zipf { trees, defective, .. } => commands::zipf(cfg, trees, defective.as_deref(), out),
        Command::Train { trees, vocab, .. } => commands::train_cmd(cfg, trees, vocab.as_deref(), out),
        Command::Entropy { trees, vocab, .. } => commands::entropy(cfg, trees, vocab.as_deref(), out),
        Command::Sweep { trees, vocab, .. } => commands::sweep(cfg, trees, vocab.as_deref(), out),
        Command::Embed { trees, checkpoint, vocab, .. } => commands::embed_cmd(trees, checkpoint, vocab, out),
        Command::Jit { commits, trees, checkpoint, vocab, synthetic, .. } => commands::jit(
            cfg,
            JitInputs {
                commits: commits.as_deref(),
                trees: trees.as_deref(),
                checkpoint: checkpoint.as_deref(),
                vocab: vocab.as_deref(),
                synthetic: *synthetic,
            },
            out,
        ),
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Everything but `wall_time_ms` is a function of the inputs.
fn manifest(cmd: &Command, cfg: &Config, out: &Outputs, error: Option<(u8, &str)>, elapsed_ms: u128) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "command={}", cmd.name());
    let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
    match error {
        None => {
            let _ = writeln!(m, "status=ok");
        }
        Some((code, msg)) => {
            let _ = writeln!(m, "status=error");
            let _ = writeln!(m, "exit_code={code}");
            let _ = writeln!(m, "error={}", one_line(msg));
        }
    }
    let seed = cfg.echo().get("seed").cloned().or_else(|| cmd.common().seed.map(|s| s.to_string()));
    let _ = writeln!(m, "seed={}", seed.unwrap_or_else(|| "0".into()));
    for (k, v) in cfg.echo() {
        let _ = writeln!(m, "config.{k}={v}");
    }
    for (name, p) in cmd.inputs() {
        let _ = writeln!(m, "input.{name}={}", p.display());
    }
    let _ = writeln!(m, "outputs={}", out.files.join(","));
    let _ = writeln!(m, "wall_time_ms={elapsed_ms}");
    m
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = &cli.command;
    let start = Instant::now();
    let out_dir = &cmd.common().out;
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!(
            "error: code=2 command={} message={:?}",
            cmd.name(),
            format!("cannot create {}: {e}", out_dir.display())
        );
        return ExitCode::from(2);
    }
    let mut out = Outputs::new(out_dir);
    let mut cfg = Config::default();
    let result = Config::load(cmd.common().config.as_deref())
        .and_then(|c| {
            cfg = c;
            apply_flags(cmd, &mut cfg)
        })
        .map_err(Failure::from)
        .and_then(|()| dispatch(cmd, &mut cfg, &mut out));
    let error = match &result {
        Ok(()) => None,
        Err(Failure::Config(msg)) => Some((2u8, msg.clone())),
        Err(Failure::Runtime(e)) => Some((1u8, format!("{e:#}"))),
    };
    let text = manifest(cmd, &cfg, &out, error.as_ref().map(|(c, m)| (*c, m.as_str())), start.elapsed().as_millis());
    if let Err(e) = std::fs::write(out.path("manifest.txt"), text) {
        eprintln!("warning: cannot write manifest: {e}");
    }
    match error {
        None => ExitCode::SUCCESS,
        Some((code, msg)) => {
            eprintln!("error: code={code} command={} message={:?}", cmd.name(), one_line(&msg));
            ExitCode::from(code)
        }
    }
}
