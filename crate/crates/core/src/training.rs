//! Mini-batch training with Adam or plain gradient descent and
//! validation-based early stopping.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ggnn::{forward, gradients, init_with_config, loss, ForwardResult, GgnnConfig, GgnnParams};
use crate::instance_graph::{build_instance_graph, encode_graph, ActivityVocabulary, EncodedGraph};
use crate::event_log::Trace;
use crate::numerics::Rng;

/// Minimum decrease of the validation loss that counts as an improvement.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Adam,
    Sgd,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(Optimizer::Adam),
            "sgd" => Ok(Optimizer::Sgd),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Share of the training portion held out for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
    pub model: GgnnConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            patience: 10,
            batch_size: 32,
            learning_rate: 0.001,
            optimizer: Optimizer::Adam,
            validation_fraction: 0.1,
            seed: 42,
            model: GgnnConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "max_epochs, patience and batch_size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "invalid learning rate {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation fraction {} outside [0, 1)",
                self.validation_fraction
            )));
        }
        if self.model.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adam moment accumulators, shaped like the parameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub first_moment: GgnnParams,
    pub second_moment: GgnnParams,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &GgnnParams) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// One bias-corrected Adam update.
pub fn adam_step(
    params: &mut GgnnParams,
    grads: &GgnnParams,
    state: &mut OptimizerState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    state.step += 1;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    let blocks = params
        .blocks_mut()
        .into_iter()
        .zip(grads.blocks())
        .zip(state.first_moment.blocks_mut())
        .zip(state.second_moment.blocks_mut());
    for (((p, (_, g)), m), v) in blocks {
        let ps = p.as_mut_slice().iter_mut();
        let ms = m.as_mut_slice().iter_mut();
        let vs = v.as_mut_slice().iter_mut();
        for (((p, &g), m), v) in ps.zip(g.as_slice()).zip(ms).zip(vs) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

pub fn sgd_step(params: &mut GgnnParams, grads: &GgnnParams, lr: f64) {
    params.add_scaled(grads, -lr);
}

/// Patience-based stopping on a loss that should decrease.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            since_best: 0,
        }
    }

    /// Records the loss of `epoch`; returns whether it is the new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if self.best_epoch.is_none() || loss < self.best - IMPROVEMENT_TOLERANCE {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-instance loss over the epoch's batches.
    pub train_cost: f64,
    pub val_loss: Option<f64>,
    pub is_best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub epochs: Vec<EpochRecord>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
}

impl TrainingReport {
    /// `epoch,train_cost,val_loss,is_best`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_cost,val_loss,is_best\n");
        for r in &self.epochs {
            let val = r.val_loss.map(|v| format!("{v:.9}")).unwrap_or_default();
            writeln!(out, "{},{:.9},{},{}", r.epoch, r.train_cost, val, r.is_best).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: GgnnParams,
    pub vocab: ActivityVocabulary,
    pub config: TrainConfig,
    pub report: TrainingReport,
}

impl TrainedModel {
    /// Model without training history, e.g. loaded from disk.
    pub fn from_parts(params: GgnnParams, vocab: ActivityVocabulary) -> Self {
        let config = TrainConfig {
            model: GgnnConfig {
                padding: params.hidden_dim - vocab.size(),
                steps: params.steps,
                readout: params.readout,
            },
            ..TrainConfig::default()
        };
        Self {
            params,
            vocab,
            config,
            report: TrainingReport {
                epochs: Vec::new(),
                stopped_epoch: 0,
                best_epoch: 0,
            },
        }
    }

    pub fn encode(&self, trace: &Trace) -> Result<EncodedGraph> {
        encode_graph(&build_instance_graph(trace), &self.vocab, self.params.hidden_dim)
    }

    pub fn predict(&self, g: &EncodedGraph) -> Result<ForwardResult> {
        Ok(forward(g, &self.params)?.1)
    }
}

/// Mean loss of `set` under `params`.
pub fn mean_loss(set: &[EncodedGraph], params: &GgnnParams) -> Result<f64> {
    let mut total = 0.0;
    for g in set {
        total += loss(forward(g, params)?.1.prediction, g.label.as_f64());
    }
    Ok(total / set.len() as f64)
}

/// Trains a fresh model.
///
/// Weights come from `Rng::new(cfg.seed)`; epoch `e` (1-based) shuffles the
/// training set with `Rng::new(cfg.seed + e)`. Without a validation set the
/// last epoch's parameters are returned, otherwise the best epoch's.
pub fn train(
    train_set: &[EncodedGraph],
    validation_set: &[EncodedGraph],
    vocab: &ActivityVocabulary,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    let mut params = init_with_config(vocab.size(), &cfg.model, &mut Rng::new(cfg.seed))?;
    let mut state = OptimizerState::new(&params);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best_params = params.clone();
    let mut records = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        Rng::new(cfg.seed.wrapping_add(epoch as u64)).shuffle(&mut order);
        let mut epoch_cost = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&EncodedGraph> = chunk.iter().map(|&i| &train_set[i]).collect();
            let step = gradients(&batch, &params).map_err(|e| match e {
                Error::Numeric { .. } => Error::Divergence {
                    epoch,
                    batch: b + 1,
                    cost: f64::NAN,
                },
                other => other,
            })?;
            if !step.cost.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b + 1,
                    cost: step.cost,
                });
            }
            epoch_cost += step.cost;
            match cfg.optimizer {
                Optimizer::Adam => adam_step(
                    &mut params,
                    &step.grads,
                    &mut state,
                    cfg.learning_rate,
                    ADAM_BETA1,
                    ADAM_BETA2,
                    ADAM_EPSILON,
                ),
                Optimizer::Sgd => sgd_step(&mut params, &step.grads, cfg.learning_rate),
            }
        }
        let train_cost = epoch_cost / train_set.len() as f64;

        if validation_set.is_empty() {
            records.push(EpochRecord {
                epoch,
                train_cost,
                val_loss: None,
                is_best: epoch == cfg.max_epochs,
            });
            best_params = params.clone();
            continue;
        }
        let val = mean_loss(validation_set, &params)?;
        let improved = stopper.observe(epoch, val);
        if improved {
            best_params = params.clone();
        }
        records.push(EpochRecord {
            epoch,
            train_cost,
            val_loss: Some(val),
            is_best: improved,
        });
        if stopper.should_stop() {
            break;
        }
    }

    let stopped_epoch = records.len();
    let best_epoch = stopper.best_epoch().unwrap_or(stopped_epoch);
    // only the finally selected epoch stays flagged
    for r in records.iter_mut() {
        r.is_best = r.epoch == best_epoch;
    }
    Ok(TrainedModel {
        params: best_params,
        vocab: vocab.clone(),
        config: cfg.clone(),
        report: TrainingReport {
            epochs: records,
            stopped_epoch,
            best_epoch,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{generate_synthetic_log, SynthSpec};
    use crate::instance_graph::{build_vocabulary, encode_log};
    use crate::ggnn::{init_params, ReadoutMode};

    #[test]
    fn patience_contract() {
        let mut s = EarlyStopping::new(10);
        let mut losses = vec![0.30, 0.29];
        losses.extend(std::iter::repeat(0.29).take(20));
        let mut stopped = None;
        for (i, l) in losses.into_iter().enumerate() {
            s.observe(i + 1, l);
            if s.should_stop() {
                stopped = Some(i + 1);
                break;
            }
        }
        assert_eq!(stopped, Some(12));
        assert_eq!(s.best_epoch(), Some(2));

        let mut s = EarlyStopping::new(1);
        s.observe(1, 0.5);
        s.observe(2, 0.5 - 1e-10);
        assert!(s.should_stop(), "sub-tolerance gains do not count");
    }

    #[test]
    fn adam_first_step_moves_by_lr_times_sign() {
        let mut p = init_params(3, 1, 1, &mut Rng::new(0)).unwrap();
        let before = p.clone();
        let mut g = p.zeros_like();
        let mut rng = Rng::new(1);
        for m in g.blocks_mut() {
            m.as_mut_slice()
                .iter_mut()
                .for_each(|x| *x = if rng.bernoulli(0.5) { 0.5 } else { -2.0 });
        }
        let mut s = OptimizerState::new(&p);
        adam_step(&mut p, &g, &mut s, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON);
        for ((a, b), gv) in p.to_flat().iter().zip(before.to_flat()).zip(g.to_flat()) {
            assert!(((a - b) + 0.01 * gv.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut p = init_params(3, 1, 1, &mut Rng::new(0)).unwrap();
        let before = p.clone();
        let mut s = OptimizerState::new(&p);
        let mut g = p.zeros_like();
        g.w_z.fill(1.0);
        adam_step(&mut p, &g, &mut s, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON);
        let after_one = p.clone();
        let m_before = s.first_moment.w_z[(0, 0)];
        adam_step(&mut p, &before.zeros_like(), &mut s, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON);
        assert!(s.first_moment.w_z[(0, 0)].abs() < m_before.abs());
        assert_eq!(p.u_h, after_one.u_h);
        assert_eq!(p.b_z, before.b_z);
    }

    fn tiny_data(n: usize, seed: u64) -> (Vec<EncodedGraph>, ActivityVocabulary) {
        let spec = SynthSpec {
            num_traces: n,
            alphabet_size: 4,
            mean_length: 3.0,
            planted_activity: 1,
            ..SynthSpec::default()
        };
        let log = generate_synthetic_log(&spec, seed).unwrap();
        let vocab = build_vocabulary(&log);
        let cfg = GgnnConfig::default();
        let graphs = encode_log(&log, &vocab, vocab.size() + cfg.padding).unwrap();
        (graphs, vocab)
    }

    #[test]
    fn single_sgd_step_matches_hand_update() {
        let (graphs, vocab) = tiny_data(5, 3);
        let cfg = TrainConfig {
            max_epochs: 1,
            batch_size: 10,
            learning_rate: 0.05,
            optimizer: Optimizer::Sgd,
            seed: 8,
            ..TrainConfig::default()
        };
        let model = train(&graphs, &[], &vocab, &cfg).unwrap();

        let p0 = init_with_config(vocab.size(), &cfg.model, &mut Rng::new(8)).unwrap();
        let refs: Vec<&EncodedGraph> = graphs.iter().collect();
        let g = gradients(&refs, &p0).unwrap().grads;
        // summation order inside the batch follows the epoch shuffle
        for ((a, p), gv) in model.params.to_flat().iter().zip(p0.to_flat()).zip(g.to_flat()) {
            assert!((a - (p - 0.05 * gv)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_learning_rate_freezes_params() {
        let (graphs, vocab) = tiny_data(20, 4);
        let cfg = TrainConfig {
            max_epochs: 3,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let model = train(&graphs[..15], &graphs[15..], &vocab, &cfg).unwrap();
        let p0 = init_with_config(vocab.size(), &cfg.model, &mut Rng::new(cfg.seed)).unwrap();
        assert_eq!(model.params, p0);
        assert_eq!(model.report.best_epoch, 1);
    }

    #[test]
    fn training_is_deterministic_and_restores_best() {
        let (graphs, vocab) = tiny_data(60, 5);
        let cfg = TrainConfig {
            max_epochs: 8,
            patience: 2,
            learning_rate: 0.01,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let a = train(&graphs[..45], &graphs[45..], &vocab, &cfg).unwrap();
        let b = train(&graphs[..45], &graphs[45..], &vocab, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.to_csv(), b.report.to_csv());

        let best = a
            .report
            .epochs
            .iter()
            .filter_map(|r| r.val_loss)
            .fold(f64::INFINITY, f64::min);
        let restored = mean_loss(&graphs[45..], &a.params).unwrap();
        assert!((restored - best).abs() < 1e-12);
        assert_eq!(a.report.epochs.iter().filter(|r| r.is_best).count(), 1);
    }

    #[test]
    fn invalid_configs_and_inputs() {
        let (graphs, vocab) = tiny_data(5, 1);
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&graphs, &[], &vocab, &bad), Err(Error::Config(_))));
        assert!(matches!(
            train(&[], &[], &vocab, &TrainConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let (graphs, vocab) = tiny_data(10, 2);
        let cfg = TrainConfig {
            max_epochs: 3,
            learning_rate: f64::MAX,
            optimizer: Optimizer::Sgd,
            model: GgnnConfig {
                readout: ReadoutMode::LinearOut,
                ..GgnnConfig::default()
            },
            ..TrainConfig::default()
        };
        match train(&graphs, &[], &vocab, &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {:?}", other.map(|m| m.report)),
        }
    }
}
