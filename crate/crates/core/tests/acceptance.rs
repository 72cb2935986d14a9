//! Acceptance suite. Each test checks one criterion at its stated tolerance
//! and prints a `PASS` or `FAIL` line with the measured values.
//!
//! The lines go straight to stderr so they show up without `--nocapture`.

use std::io::Write as _;
use std::time::{Duration, Instant};

use astnat::eval::{cross_validate, report_csv, self_cross_entropy, token_shuffled_control};
use astnat::jit::{
    longitudinal_split, metrics, metrics_csv, randomize_labels, run_jit_vectors, synthetic_vectors, FoldId,
    FoldMetrics, JitConfig, SyntheticJit,
};
use astnat::lm::{
    forward_encoded, loss_and_gradients_encoded, target_log_probs, train, EncodedExample, EncodedTree, ModelDims,
    ModelParams, TrainConfig,
};
use astnat::seed::rng_for;
use astnat::stats::{fit_zipf, rank_frequencies, wilcoxon_signed_rank, RankTable};
use astnat::tree::generate::{generate_corpus, GenConfig};
use astnat::tree::io::trees_to_text;
use astnat::tree::{build_vocabulary, make_masked_example, mask_target, AstTree, Vocabulary};
use rand::seq::SliceRandom;
use rand::Rng;

fn report(name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {verdict} {name}: {detail}");
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn bits(lps: &[f64]) -> f64 {
    -lps.iter().sum::<f64>() / lps.len() as f64 / std::f64::consts::LN_2
}

#[test]
fn gradient_check() {
    let start = Instant::now();
    let eps = 1e-4;
    let trees = generate_corpus(40, 5, &GenConfig { max_leaves: Some(12), ..GenConfig::default() });
    let vocab = build_vocabulary(&trees).unwrap();
    let dims = ModelDims { vocab: vocab.len(), embed: 4, hidden: 4, head: 4 };
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for seed in 0..20u64 {
        let mut rng = rng_for(seed, "acceptance-gc", 0);
        let mut p = ModelParams::init(dims, &mut rng);
        let batch: Vec<EncodedExample> = (0..2)
            .map(|_| {
                let t = &trees[rng.random_range(0..trees.len())];
                EncodedExample::from_masked(&make_masked_example(t, &vocab, &mut rng).unwrap(), &vocab).unwrap()
            })
            .collect();
        let (_, grads) = loss_and_gradients_encoded(&batch, &p).unwrap();
        for ti in 0..grads.tensors().len() {
            let len = grads.tensors()[ti].1.data.len();
            for idx in 0..len {
                let orig = p.tensors()[ti].1.data[idx];
                p.tensors_mut()[ti].1.data[idx] = orig + eps;
                let (lp, _) = loss_and_gradients_encoded(&batch, &p).unwrap();
                p.tensors_mut()[ti].1.data[idx] = orig - eps;
                let (lm, _) = loss_and_gradients_encoded(&batch, &p).unwrap();
                p.tensors_mut()[ti].1.data[idx] = orig;
                let numeric = (lp - lm) / (2.0 * eps);
                let analytic = grads.tensors()[ti].1.data[idx];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-4 && within(elapsed, 60);
    report(
        "gradient-check",
        pass,
        &format!("max rel err {worst:.2e} over {checked} entries, 20 seeds, d=4, {:.1}s", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn child_permutation_invariance() {
    let trees = generate_corpus(100, 13, &GenConfig::default());
    let vocab = build_vocabulary(&trees).unwrap();
    let p = ModelParams::init(ModelDims::with_vocab(vocab.len()), &mut rng_for(13, "acceptance-perm", 0));
    let mut rng = rng_for(13, "acceptance-perm", 1);
    let mut worst = 0.0f64;
    for t in &trees {
        let ex = make_masked_example(t, &vocab, &mut rng).unwrap();
        let shuffled = ex.tree.reorder_children(|_, kids| {
            let mut k = kids.to_vec();
            k.shuffle(&mut rng);
            k
        });
        let a = EncodedExample { tree: EncodedTree::encode_strict(&ex.tree, &vocab).unwrap(), target: ex.target_token };
        let b =
            EncodedExample { tree: EncodedTree::encode_strict(&shuffled, &vocab).unwrap(), target: ex.target_token };
        let (oa, ob) = (forward_encoded(&a.tree, &p), forward_encoded(&b.tree, &p));
        for (x, y) in oa.logits.iter().zip(&ob.logits) {
            worst = worst.max((x - y).abs());
        }
        let (la, _) = loss_and_gradients_encoded(std::slice::from_ref(&a), &p).unwrap();
        let (lb, _) = loss_and_gradients_encoded(std::slice::from_ref(&b), &p).unwrap();
        worst = worst.max((la - lb).abs());
    }
    let pass = worst <= 1e-12;
    report("child-permutation-invariance", pass, &format!("max abs diff {worst:.2e} over 100 trees"));
    assert!(pass);
}

/// Mean over trees of the mean surprisal of every leaf, each masked in turn.
fn training_self_entropy(trees: &[AstTree], vocab: &Vocabulary, params: &ModelParams) -> f64 {
    let per_tree: Vec<f64> = trees
        .iter()
        .map(|t| {
            let examples: Vec<EncodedExample> = t
                .leaves()
                .into_iter()
                .map(|l| EncodedExample::from_masked(&mask_target(t, l, vocab).unwrap(), vocab).unwrap())
                .collect();
            bits(&target_log_probs(&examples, params))
        })
        .collect();
    per_tree.iter().sum::<f64>() / per_tree.len() as f64
}

#[test]
fn memorization() {
    let start = Instant::now();
    let trees = generate_corpus(50, 7, &GenConfig { max_leaves: Some(20), ..GenConfig::default() });
    let vocab = build_vocabulary(&trees).unwrap();
    let cfg = TrainConfig { epochs: 200, seed: 7, ..TrainConfig::default() };
    let out = train(&trees, &vocab, &cfg, 20).unwrap();
    let h = training_self_entropy(&trees, &vocab, &out.checkpoint.params);
    let last = out.epoch_losses.last().unwrap() / std::f64::consts::LN_2;
    let elapsed = start.elapsed();
    let pass = h < 1.0 && within(elapsed, 300);
    report(
        "memorization",
        pass,
        &format!(
            "training self-entropy {h:.3} bits over every leaf (last epoch loss {last:.3} bits), target < 1.0, {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn structure_vs_random() {
    let start = Instant::now();
    let corpus = generate_corpus(2000, 21, &GenConfig { max_leaves: Some(20), ..GenConfig::default() });
    let control = token_shuffled_control(&corpus, 21);
    let cfg = TrainConfig { seed: 21, ..TrainConfig::default() };
    let real = cross_validate(&corpus, &build_vocabulary(&corpus).unwrap(), &cfg, 20, 5).unwrap();
    let shuffled = cross_validate(&control, &build_vocabulary(&control).unwrap(), &cfg, 20, 5).unwrap();
    let gap = shuffled.mean - real.mean;
    let elapsed = start.elapsed();
    let pass = gap >= 2.0 && within(elapsed, 1800);
    report(
        "structure-vs-random",
        pass,
        &format!(
            "held-out {:.3} bits vs shuffled control {:.3} bits, gap {gap:.3} (need >= 2), {:.0}s",
            real.mean,
            shuffled.mean,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn zipf_recovery() {
    let mut worst_slope = 0.0f64;
    let mut worst_r2 = 1.0f64;
    for s in [0.5, 1.0, 1.5, 2.0] {
        let counts = (1..=100).map(|r| (format!("l{r:03}"), (1e9 * (r as f64).powf(-s)).round() as u64));
        let fit = fit_zipf(&RankTable::from_counts(counts), false).unwrap();
        worst_slope = worst_slope.max((-fit.slope - s).abs());
        worst_r2 = worst_r2.min(fit.r_squared);
    }
    let corpus = generate_corpus(2000, 0, &GenConfig::default());
    let toy = fit_zipf(&rank_frequencies(&corpus, true).unwrap(), true).unwrap();
    let pass = worst_slope <= 0.01 && worst_r2 >= 0.999 && toy.r_squared >= 0.86;
    report(
        "zipf-recovery",
        pass,
        &format!(
            "exponent err {worst_slope:.2e}, min r2 {worst_r2:.6}; toy inner labels r2 {:.3} over {} ranks",
            toy.r_squared, toy.points_used
        ),
    );
    assert!(pass);
}

/// Exhaustive sign-flip distribution of the positive-rank sum.
fn enumerated_p(d: &[f64]) -> f64 {
    let d: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    // ranks doubled to keep midranks integral
    let r: Vec<u64> = d
        .iter()
        .map(|v| {
            let less = d.iter().filter(|w| w.abs() < v.abs()).count() as u64;
            let tied = d.iter().filter(|w| w.abs() == v.abs()).count() as u64;
            2 * less + tied + 1
        })
        .collect();
    let observed: u64 = d.iter().zip(&r).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..1 << n {
        let s: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r[i]).sum();
        le += u64::from(s <= observed);
        ge += u64::from(s >= observed);
    }
    ((2 * le.min(ge)) as f64 / (1u64 << n) as f64).min(1.0)
}

#[test]
fn wilcoxon_oracle() {
    let mut rng = rng_for(77, "acceptance-wilcoxon", 0);
    let (mut cases, mut mismatches) = (0, 0);
    while cases < 100 {
        let n = rng.random_range(5..=12);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-8..=8) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-8..=8) as f64).collect();
        let Ok(res) = wilcoxon_signed_rank(&a, &b) else {
            continue;
        };
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        if !res.exact || res.p_value != enumerated_p(&d) {
            mismatches += 1;
        }
        cases += 1;
    }
    let pass = mismatches == 0;
    report("wilcoxon-oracle", pass, &format!("{mismatches} mismatches in {cases} cases with n <= 12"));
    assert!(pass);
}

#[test]
fn entropy_closed_forms() {
    let uniform = self_cross_entropy(&[1.0 / 256.0; 1000]).unwrap();
    let perfect = self_cross_entropy(&[1.0; 1000]).unwrap();
    let pass = uniform == 8.0 && perfect.abs() <= 1e-12;
    report("entropy-closed-forms", pass, &format!("uniform over 256 {uniform} bits, perfect {perfect} bits"));
    assert!(pass);
}

fn overall(rows: &[FoldMetrics]) -> &FoldMetrics {
    rows.iter().find(|r| r.fold == FoldId::Overall).unwrap()
}

#[test]
fn jit_synthetic() {
    let start = Instant::now();
    let cfg = SyntheticJit::default();
    let (mut min_f1, mut recall_up, mut max_mcc) = (1.0f64, 0, 0.0f64);
    let mut lines = Vec::new();
    for seed in 0..10u64 {
        let data = synthetic_vectors(&cfg, seed);
        let jc = JitConfig { seed, ..JitConfig::default() };
        let plain = run_jit_vectors(&data, &jc).unwrap();
        let us = run_jit_vectors(&data, &JitConfig { undersample: true, ..jc.clone() }).unwrap();
        let control = run_jit_vectors(&randomize_labels(&data, seed), &jc).unwrap();
        let (p, u, c) = (&overall(&plain).metrics, &overall(&us).metrics, &overall(&control).metrics);
        min_f1 = min_f1.min(p.f1);
        recall_up += usize::from(u.recall > p.recall);
        max_mcc = max_mcc.max(c.mcc.abs());
        lines.push(format!(
            "seed {seed}: f1 {:.3} recall {:.3}->{:.3} control mcc {:+.3}",
            p.f1, p.recall, u.recall, c.mcc
        ));
    }
    let elapsed = start.elapsed();
    let pass = min_f1 >= 0.8 && recall_up >= 8 && max_mcc <= 0.15 && within(elapsed, 600);
    report(
        "jit-synthetic",
        pass,
        &format!(
            "min f1 {min_f1:.3}, recall up in {recall_up}/10, max control |mcc| {max_mcc:.3}, {:.0}s [{}]",
            elapsed.as_secs_f64(),
            lines.join("; ")
        ),
    );
    assert!(pass);
}

#[test]
fn longitudinal_fold_boundaries() {
    let f = longitudinal_split(100, 5).unwrap();
    let pass = f.len() == 5
        && f[0].train == (0..20)
        && f[0].test == (20..30)
        && f[4].train == (0..80)
        && f[4].test == (80..90);
    report(
        "longitudinal-fold-boundaries",
        pass,
        &format!("fold 0 {:?}/{:?}, fold 4 {:?}/{:?}", f[0].train, f[0].test, f[4].train, f[4].test),
    );
    assert!(pass);
}

#[test]
fn metrics_oracle() {
    // TP=3 FP=1 FN=2 TN=4
    let y_true = [true, true, true, false, true, true, false, false, false, false];
    let y_pred = [true, true, true, true, false, false, false, false, false, false];
    let m = metrics(&y_true, &y_pred).unwrap();
    let expected = [
        ("balanced accuracy", m.acc_balanced, (0.6 + 0.8) / 2.0),
        ("precision", m.precision, 0.75),
        ("recall", m.recall, 0.6),
        ("f1", m.f1, 2.0 * 0.75 * 0.6 / 1.35),
        ("mcc", m.mcc, 10.0 / 600f64.sqrt()),
    ];
    let worst = expected.iter().map(|(_, got, want)| (got - want).abs()).fold(0.0, f64::max);
    let pass = worst <= 1e-9 && (m.mcc - 0.408).abs() < 5e-4;
    report("metrics-oracle", pass, &format!("max abs err {worst:.1e}, mcc {:.6}", m.mcc));
    assert!(pass);
}

/// Library-level rendering of what each command writes; the binary itself
/// is exercised by the CLI tests.
fn artifacts(seed: u64) -> Vec<(&'static str, Vec<u8>)> {
    let corpus = generate_corpus(60, seed, &GenConfig { max_leaves: Some(20), ..GenConfig::default() });
    let vocab = build_vocabulary(&corpus).unwrap();
    let table = rank_frequencies(&corpus, false).unwrap();
    let fit = fit_zipf(&table, false).unwrap();
    let cfg = TrainConfig { epochs: 2, embed_dim: 8, hidden_dim: 6, head_dim: 4, seed, ..TrainConfig::default() };
    let ckpt = train(&corpus, &vocab, &cfg, 20).unwrap().checkpoint;
    let entropy = cross_validate(&corpus, &vocab, &cfg, 20, 5).unwrap();
    let data = synthetic_vectors(&SyntheticJit { commits: 200, ..SyntheticJit::default() }, seed);
    let jit =
        run_jit_vectors(&data, &JitConfig { n_trees: 20, undersample: true, seed, ..JitConfig::default() }).unwrap();
    vec![
        ("corpus", trees_to_text(&corpus).into_bytes()),
        ("vocab", vocab.to_text().into_bytes()),
        ("ranks", table.to_csv().into_bytes()),
        ("zipf", fit.to_csv().into_bytes()),
        ("checkpoint", ckpt.to_bytes()),
        ("entropy", report_csv(&[&entropy]).into_bytes()),
        ("jit", metrics_csv(&jit).into_bytes()),
    ]
}

#[test]
fn determinism() {
    let (a, b) = (artifacts(3), artifacts(3));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0).collect();
    let pass = differing.is_empty();
    report("determinism", pass, &format!("{} artifacts compared byte for byte, differing: {differing:?}", a.len()));
    assert!(pass);
}
