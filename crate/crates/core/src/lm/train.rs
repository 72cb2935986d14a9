use rand::seq::SliceRandom;

use crate::seed::rng_for;
use crate::tree::{make_masked_example, AstTree, Vocabulary};

use super::adam::{adam_step, AdamState};
use super::checkpoint::ModelCheckpoint;
use super::encode::EncodedExample;
use super::model::loss_and_gradients_encoded;
use super::params::{ModelDims, ModelParams};
use super::ModelError;

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub decoupled_weight_decay: bool,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub head_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.025,
            weight_decay: 1e-4,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            decoupled_weight_decay: false,
            embed_dim: ModelDims::DEFAULT_EMBED,
            hidden_dim: ModelDims::DEFAULT_HIDDEN,
            head_dim: ModelDims::DEFAULT_HEAD,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.head_dim == 0 {
            return bad("layer widths must be positive");
        }
        Ok(())
    }

    pub fn dims(&self, vocab: usize) -> ModelDims {
        ModelDims { vocab, embed: self.embed_dim, hidden: self.hidden_dim, head: self.head_dim }
    }

    /// `key=value` lines in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("learning_rate", fmt_f64(self.learning_rate)),
            ("weight_decay", fmt_f64(self.weight_decay)),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("adam_beta1", fmt_f64(self.adam_beta1)),
            ("adam_beta2", fmt_f64(self.adam_beta2)),
            ("adam_eps", fmt_f64(self.adam_eps)),
            ("decoupled_weight_decay", self.decoupled_weight_decay.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("head_dim", self.head_dim.to_string()),
        ]
    }

    /// Sets one field from its `to_pairs` key. Returns `Ok(false)` for an
    /// unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ModelError> {
        fn p<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ModelError> {
            v.trim().parse().map_err(|_| ModelError::InvalidConfig(format!("bad value `{v}` for {key}")))
        }
        match key {
            "learning_rate" => self.learning_rate = p(key, value)?,
            "weight_decay" => self.weight_decay = p(key, value)?,
            "batch_size" => self.batch_size = p(key, value)?,
            "epochs" => self.epochs = p(key, value)?,
            "seed" => self.seed = p(key, value)?,
            "adam_beta1" => self.adam_beta1 = p(key, value)?,
            "adam_beta2" => self.adam_beta2 = p(key, value)?,
            "adam_eps" => self.adam_eps = p(key, value)?,
            "decoupled_weight_decay" => self.decoupled_weight_decay = p(key, value)?,
            "embed_dim" => self.embed_dim = p(key, value)?,
            "hidden_dim" => self.hidden_dim = p(key, value)?,
            "head_dim" => self.head_dim = p(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

// shortest representation that parses back to the same bits
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Trained checkpoint plus the mean training loss (nats) of every epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: ModelCheckpoint,
    pub epoch_losses: Vec<f64>,
}

/// Trains from a fresh seeded initialization.
///
/// Each epoch draws one masked target per tree, shuffles the examples and
/// takes one Adam step per batch. The reported epoch loss is the mean of the
/// per-example losses seen while training that epoch.
pub fn train(
    corpus: &[AstTree],
    vocab: &Vocabulary,
    config: &TrainConfig,
    max_len: usize,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    let dims = config.dims(vocab.len());
    let params = ModelParams::init(dims, &mut rng_for(config.seed, "init", 0));
    train_from(corpus, vocab, config, max_len, params)
}

/// Continues training from `params`.
pub fn train_from(
    corpus: &[AstTree],
    vocab: &Vocabulary,
    config: &TrainConfig,
    max_len: usize,
    mut params: ModelParams,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    if params.dims.vocab != vocab.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "vocabulary has {} entries, model expects {}",
            vocab.len(),
            params.dims.vocab
        )));
    }
    for (index, t) in corpus.iter().enumerate() {
        if t.leaf_count() > max_len {
            return Err(ModelError::TreeTooLong { index, leaves: t.leaf_count(), max_len });
        }
    }
    let mut state = AdamState::new(&params);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs as u64 {
        let mut mask_rng = rng_for(config.seed, "train-mask", epoch);
        let mut examples = Vec::with_capacity(corpus.len());
        for t in corpus {
            let m = make_masked_example(t, vocab, &mut mask_rng)?;
            examples.push(EncodedExample::from_masked(&m, vocab)?);
        }
        examples.shuffle(&mut rng_for(config.seed, "train-shuffle", epoch));
        let mut total = 0.0;
        for batch in examples.chunks(config.batch_size) {
            let (loss, grads) = loss_and_gradients_encoded(batch, &params)?;
            adam_step(&mut params, &grads, &mut state, config)?;
            total += loss * batch.len() as f64;
        }
        epoch_losses.push(total / examples.len() as f64);
    }
    let checkpoint = ModelCheckpoint::new(params, vocab.hash(), config.clone(), max_len);
    Ok(TrainOutcome { checkpoint, epoch_losses })
}
