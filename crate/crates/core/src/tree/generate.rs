//! Seeded generator of toy-language functions.
//!
//! Programs are emitted as source text and run through [`parse_toy`], so a
//! generated corpus is exactly what the parser produces for real files.
//! Identifier, literal and statement choices are drawn from rank-skewed
//! (Zipf-like) distributions with a handful of recurring idioms (counting
//! loops, guards, accumulators), which gives the corpus the repetitive
//! texture of real code.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{parse_toy, AstTree};

const FN_NAMES: &[&str] = &["get", "sum", "len", "max", "init"];
const VARS: &[&str] = &["x", "n", "i", "a", "s", "acc"];
const CALLEES: &[&str] = &["log", "get", "sum", "len"];
const NUMBERS: &[&str] = &["0", "1", "2", "10"];

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Maximum number of statements in a function body.
    pub max_statements: usize,
    /// Maximum nesting of `if`/`while` blocks.
    pub max_block_depth: usize,
    /// Maximum depth of an expression tree.
    pub max_expr_depth: usize,
    /// Rejection bound on the leaf count of a generated tree (`None`: no
    /// bound).
    pub max_leaves: Option<usize>,
    /// Zipf exponent for identifier and literal choices.
    pub zipf_exponent: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_statements: 4, max_block_depth: 2, max_expr_depth: 2, max_leaves: None, zipf_exponent: 1.2 }
    }
}

fn zipf_weights(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-s))).expect("positive weights")
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    vars: WeightedIndex<f64>,
    fns: WeightedIndex<f64>,
    callees: WeightedIndex<f64>,
    nums: WeightedIndex<f64>,
    scope: Vec<&'static str>,
}

impl<R: Rng> Gen<'_, R> {
    fn var(&mut self) -> &'static str {
        // prefer names already in scope
        if !self.scope.is_empty() && self.rng.random_bool(0.85) {
            let w = zipf_weights(self.scope.len(), 1.0);
            return self.scope[w.sample(self.rng)];
        }
        VARS[self.vars.sample(self.rng)]
    }

    fn fresh_var(&mut self) -> &'static str {
        let v = VARS[self.vars.sample(self.rng)];
        if !self.scope.contains(&v) {
            self.scope.push(v);
        }
        v
    }

    fn num(&mut self) -> &'static str {
        NUMBERS[self.nums.sample(self.rng)]
    }

    fn atom(&mut self) -> String {
        match self.rng.random_range(0..10) {
            0..=5 => self.var().to_string(),
            6..=8 => self.num().to_string(),
            _ => if self.rng.random_bool(0.5) { "true" } else { "false" }.to_string(),
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.random_bool(0.45) {
            return self.atom();
        }
        match self.rng.random_range(0..20) {
            0..=7 => {
                let op = ["+", "-", "+", "*", "+", "-"][self.rng.random_range(0..6)];
                let lhs = self.var().to_string();
                format!("{lhs} {op} {}", self.expr(depth - 1))
            }
            8..=10 => format!("{} * {}", self.var(), self.num()),
            11..=13 => {
                let f = CALLEES[self.callees.sample(self.rng)];
                let argc = self.rng.random_range(0..=2);
                let args: Vec<String> = (0..argc).map(|_| self.expr(depth - 1)).collect();
                format!("{f}({})", args.join(", "))
            }
            14..=15 => format!("({})", self.expr(depth - 1)),
            16 => format!("-{}", self.var()),
            _ => self.cond(depth - 1),
        }
    }

    fn cond(&mut self, depth: usize) -> String {
        let op = ["<", "==", "<", "!=", "<", ">"][self.rng.random_range(0..6)];
        let lhs = self.var().to_string();
        let rhs = if self.rng.random_bool(0.6) { self.num().to_string() } else { self.var().to_string() };
        let base = format!("{lhs} {op} {rhs}");
        if depth > 0 && self.rng.random_bool(0.3) {
            let join = if self.rng.random_bool(0.5) { "&&" } else { "||" };
            format!("{base} {join} {}", self.cond(depth - 1))
        } else if self.rng.random_bool(0.1) {
            format!("!{}", self.var())
        } else {
            base
        }
    }

    fn block(&mut self, depth: usize, max_stmts: usize, out: &mut String) {
        out.push('{');
        let n = self.rng.random_range(1..=max_stmts.max(1));
        for _ in 0..n {
            out.push(' ');
            self.statement(depth, out);
        }
        out.push_str(" }");
    }

    fn statement(&mut self, depth: usize, out: &mut String) {
        let d = self.cfg.max_expr_depth;
        let roll = self.rng.random_range(0..100);
        let nested = depth < self.cfg.max_block_depth;
        match roll {
            0..=29 => {
                if self.rng.random_bool(0.1) {
                    out.push_str("return;");
                } else {
                    let e = self.expr(d);
                    out.push_str(&format!("return {e};"));
                }
            }
            30..=49 => {
                let e = self.expr(d);
                let v = self.fresh_var();
                out.push_str(&format!("let {v} = {e};"));
            }
            50..=61 => {
                let v = self.var();
                // accumulator idiom
                if self.rng.random_bool(0.5) {
                    let rhs = if self.rng.random_bool(0.6) { "1".to_string() } else { self.atom() };
                    out.push_str(&format!("{v} = {v} + {rhs};"));
                } else {
                    let e = self.expr(d);
                    out.push_str(&format!("{v} = {e};"));
                }
            }
            62..=79 if nested => {
                let c = self.cond(1);
                out.push_str(&format!("if ({c}) "));
                if self.rng.random_bool(0.5) {
                    // guard idiom
                    let e = self.atom();
                    out.push_str(&format!("{{ return {e}; }}"));
                } else {
                    self.block(depth + 1, 2, out);
                }
                if self.rng.random_bool(0.35) {
                    out.push_str(" else ");
                    self.block(depth + 1, 2, out);
                }
            }
            80..=89 if nested => {
                // counting loop idiom
                let i = self.var();
                let bound = if self.rng.random_bool(0.5) { self.var().to_string() } else { self.num().to_string() };
                out.push_str(&format!("while ({i} < {bound}) {{ "));
                if self.rng.random_bool(0.5) {
                    self.statement(depth + 1, out);
                    out.push(' ');
                }
                out.push_str(&format!("{i} = {i} + 1; }}"));
            }
            _ => {
                let f = CALLEES[self.callees.sample(self.rng)];
                let a = self.atom();
                out.push_str(&format!("{f}({a});"));
            }
        }
    }

    fn function(&mut self) -> String {
        self.scope.clear();
        let name = FN_NAMES[self.fns.sample(self.rng)];
        let nparams = [0, 1, 1, 1, 2, 2, 3][self.rng.random_range(0..7)];
        let mut params: Vec<&'static str> = Vec::new();
        for _ in 0..nparams {
            let v = VARS[self.vars.sample(self.rng)];
            if !params.contains(&v) {
                params.push(v);
            }
        }
        self.scope.extend(params.iter().copied());
        let mut out = format!("fn {name}({}) ", params.join(", "));
        let max = self.cfg.max_statements;
        self.block(0, max, &mut out);
        out
    }
}

/// Generates the source text of one function.
pub fn generate_source<R: Rng>(rng: &mut R, cfg: &GenConfig) -> String {
    let s = cfg.zipf_exponent;
    let mut g = Gen {
        vars: zipf_weights(VARS.len(), s),
        fns: zipf_weights(FN_NAMES.len(), s),
        callees: zipf_weights(CALLEES.len(), s),
        nums: zipf_weights(NUMBERS.len(), s),
        rng,
        cfg,
        scope: Vec::new(),
    };
    g.function()
}

/// Generates `count` parsed toy functions. Reproducible for a fixed seed.
pub fn generate_corpus(count: usize, seed: u64, cfg: &GenConfig) -> Vec<AstTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let src = generate_source(&mut rng, cfg);
        let tree = parse_toy(&src).expect("generator emits valid toy programs");
        if cfg.max_leaves.is_some_and(|m| tree.leaf_count() > m) {
            continue;
        }
        let id = format!("gen-{seed}-{}", out.len());
        out.push(tree.with_source_id(id));
    }
    out
}
