use super::{Event, EventLog, Label, Trace};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Parameters of a synthetic log with a known outcome driver.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_traces: usize,
    pub alphabet_size: usize,
    pub mean_length: f64,
    /// Index into the alphabet of the activity that determines the label.
    pub planted_activity: usize,
    pub plant_rate: f64,
    pub noise_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_traces: 2000,
            alphabet_size: 8,
            mean_length: 6.0,
            planted_activity: 3,
            plant_rate: 0.3,
            noise_rate: 0.0,
        }
    }
}

const BASE_TIMESTAMP: i64 = 1_577_836_800_000; // 2020-01-01T00:00:00Z

impl SynthSpec {
    pub fn activity_name(index: usize) -> String {
        format!("A{index:02}")
    }

    pub fn planted_name(&self) -> String {
        Self::activity_name(self.planted_activity)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_traces == 0 {
            return bad("num_traces must be positive".into());
        }
        if self.alphabet_size < 2 {
            return bad(format!("alphabet_size {} < 2", self.alphabet_size));
        }
        if !(self.mean_length >= 1.0) {
            return bad(format!("mean_length {} < 1", self.mean_length));
        }
        if self.planted_activity >= self.alphabet_size {
            return bad(format!(
                "planted activity {} outside alphabet of {}",
                self.planted_activity, self.alphabet_size
            ));
        }
        if !(self.plant_rate > 0.0 && self.plant_rate < 1.0) {
            return bad(format!("plant_rate {} outside (0, 1)", self.plant_rate));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return bad(format!("noise_rate {} outside [0, 1)", self.noise_rate));
        }
        Ok(())
    }
}

/// Generates a log whose label is driven by one planted activity.
///
/// All non-planted activities form a Markov chain with seeded random
/// transition weights. Each trace walks that chain for a length drawn
/// uniformly from `1..=round(2·mean_length − 1)`. With probability
/// `plant_rate` the planted activity is inserted at a uniform position and
/// the trace is labelled positive; otherwise it is absent and the trace is
/// negative. Finally each label is flipped with probability `noise_rate`.
pub fn generate_synthetic_log(spec: &SynthSpec, seed: u64) -> Result<EventLog> {
    spec.validate()?;
    let mut rng = Rng::new(seed);
    let walk: Vec<usize> = (0..spec.alphabet_size)
        .filter(|&a| a != spec.planted_activity)
        .collect();
    let transitions: Vec<Vec<f64>> = walk
        .iter()
        .map(|_| walk.iter().map(|_| rng.next_f64().powi(2)).collect())
        .collect();
    let span = ((2.0 * spec.mean_length - 1.0).round() as usize).max(1);

    let mut traces = Vec::with_capacity(spec.num_traces);
    for i in 0..spec.num_traces {
        let len = 1 + rng.below(span);
        let mut state = rng.below(walk.len());
        let mut seq = vec![walk[state]];
        while seq.len() < len {
            state = sample_weighted(&transitions[state], &mut rng);
            seq.push(walk[state]);
        }
        let planted = rng.bernoulli(spec.plant_rate);
        if planted {
            let pos = rng.below(seq.len() + 1);
            seq.insert(pos, spec.planted_activity);
        }
        let mut label = Label::from_bool(planted);
        if rng.bernoulli(spec.noise_rate) {
            label = label.flipped();
        }

        let case_id = format!("case{i:05}");
        let mut ts = BASE_TIMESTAMP + i as i64 * 3_600_000;
        let events = seq
            .into_iter()
            .map(|a| {
                ts += (1 + rng.below(120) as i64) * 60_000;
                Event {
                    activity: SynthSpec::activity_name(a),
                    case_id: case_id.clone(),
                    timestamp: ts,
                }
            })
            .collect();
        traces.push(Trace::new(case_id, events, label)?);
    }
    EventLog::new(traces)
}

fn sample_weighted(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.next_f64() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_activity_drives_the_label() {
        let spec = SynthSpec::default();
        let log = generate_synthetic_log(&spec, 7).unwrap();
        assert_eq!(log.len(), 2000);
        let planted = spec.planted_name();
        let positives = log
            .traces()
            .iter()
            .filter(|t| t.label() == Label::Positive)
            .count();
        // Binomial(2000, 0.3): sd ≈ 20.5, allow ~4 sd
        assert!((520..=680).contains(&positives), "{positives}");
        for t in log.traces() {
            let has = t.activities().any(|a| a == planted);
            assert_eq!(has, t.label() == Label::Positive);
        }
    }

    #[test]
    fn noise_flips_some_labels() {
        let spec = SynthSpec {
            noise_rate: 0.2,
            ..SynthSpec::default()
        };
        let log = generate_synthetic_log(&spec, 1).unwrap();
        let planted = spec.planted_name();
        let flipped = log
            .traces()
            .iter()
            .filter(|t| t.activities().any(|a| a == planted) != (t.label() == Label::Positive))
            .count();
        assert!((300..=500).contains(&flipped), "{flipped}");
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec {
            num_traces: 50,
            ..SynthSpec::default()
        };
        assert_eq!(
            generate_synthetic_log(&spec, 3).unwrap(),
            generate_synthetic_log(&spec, 3).unwrap()
        );
        assert_ne!(
            generate_synthetic_log(&spec, 3).unwrap(),
            generate_synthetic_log(&spec, 4).unwrap()
        );
    }

    #[test]
    fn degenerate_specs_rejected() {
        for spec in [
            SynthSpec {
                mean_length: 0.5,
                ..SynthSpec::default()
            },
            SynthSpec {
                alphabet_size: 1,
                planted_activity: 0,
                ..SynthSpec::default()
            },
            SynthSpec {
                plant_rate: 1.0,
                ..SynthSpec::default()
            },
            SynthSpec {
                planted_activity: 8,
                ..SynthSpec::default()
            },
        ] {
            assert!(matches!(generate_synthetic_log(&spec, 0), Err(Error::Config(_))));
        }
    }

    #[test]
    fn mean_length_is_respected() {
        let spec = SynthSpec {
            plant_rate: 0.01,
            ..SynthSpec::default()
        };
        let log = generate_synthetic_log(&spec, 5).unwrap();
        let mean = log.num_events() as f64 / log.len() as f64;
        assert!((mean - 6.0).abs() < 0.3, "{mean}");
    }
}
