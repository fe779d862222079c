use super::backward::gradients;
use super::forward::{forward, loss};
use super::{init_params, GgnnParams, ReadoutMode};
use crate::error::Result;
use crate::event_log::{Label, Trace};
use crate::instance_graph::{build_instance_graph, encode_graph, ActivityVocabulary, EncodedGraph};
use crate::numerics::{finite_difference_gradient, max_relative_error, Rng};

/// Largest tolerated relative gradient error.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
/// Central-difference step.
pub const GRADIENT_EPSILON: f64 = 1e-5;

/// One randomly drawn gradient-check problem.
#[derive(Debug, Clone)]
pub struct GradientCase {
    pub batch: Vec<EncodedGraph>,
    pub params: GgnnParams,
}

/// Draws a batch of one to three graphs with at most six nodes, a hidden
/// size of at most 12, one to four steps and perturbed parameters.
pub fn random_gradient_case(rng: &mut Rng) -> Result<GradientCase> {
    let alphabet_size = 1 + rng.below(5);
    let alphabet: Vec<String> = (0..alphabet_size).map(|i| format!("a{i}")).collect();
    let vocab = ActivityVocabulary::from_activities(alphabet.iter().cloned());
    let padding = rng.below(12 - vocab.size() + 1);
    let steps = 1 + rng.below(4);
    let d = vocab.size() + padding;

    let batch = (0..1 + rng.below(3))
        .map(|i| {
            let len = 1 + rng.below(6);
            let acts: Vec<&str> = (0..len)
                .map(|_| alphabet[rng.below(alphabet_size)].as_str())
                .collect();
            let label = Label::from_bool(rng.bernoulli(0.5));
            let t = Trace::from_activities(&format!("g{i}"), &acts, label)?;
            encode_graph(&build_instance_graph(&t), &vocab, d)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut params = init_params(vocab.size(), padding, steps, rng)?;
    params.readout = if rng.bernoulli(0.5) {
        ReadoutMode::Literal
    } else {
        ReadoutMode::LinearOut
    };
    // move biases off zero so every path carries gradient
    for m in params.blocks_mut() {
        for x in m.as_mut_slice() {
            *x += rng.uniform(-0.3, 0.3);
        }
    }
    Ok(GradientCase { batch, params })
}

/// Worst relative error between the analytic and the central-difference
/// gradient of the batch cost.
pub fn gradient_error(case: &GradientCase) -> Result<f64> {
    let refs: Vec<&EncodedGraph> = case.batch.iter().collect();
    let analytic = gradients(&refs, &case.params)?.grads.to_flat();
    let mut probe = case.params.clone();
    let mut failure = None;
    let numeric = finite_difference_gradient(
        |flat| {
            probe.set_flat(flat).expect("length preserved");
            let mut cost = 0.0;
            for g in &refs {
                match forward(g, &probe) {
                    Ok((_, out)) => cost += loss(out.prediction, g.label.as_f64()),
                    Err(e) => {
                        failure.get_or_insert(e);
                        return f64::NAN;
                    }
                }
            }
            cost
        },
        &case.params.to_flat(),
        GRADIENT_EPSILON,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(max_relative_error(&analytic, &numeric?))
}

/// Runs `cases` random checks from `seed` and returns the worst error.
pub fn gradient_check(cases: usize, seed: u64) -> Result<f64> {
    let mut rng = Rng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        worst = worst.max(gradient_error(&random_gradient_case(&mut rng)?)?);
    }
    Ok(worst)
}
