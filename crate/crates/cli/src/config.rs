//! Configuration file and flag resolution.
//!
//! The file is TOML: plain `key = value` lines grouped in `[sections]`.
//!
//! ```toml
//! seed = 42
//! jobs = 1
//! folds = 10
//!
//! [paths]
//! input = "log.csv"
//! out = "results"
//! model = "results/model.json"
//!
//! [schema]
//! case_column = "case"
//! timestamp_format = "dd.MM.yy HH:mm:ss"
//!
//! [train]
//! max_epochs = 100
//! optimizer = "adam"
//!
//! [model]
//! padding = 8
//! readout = "literal"
//!
//! [dfg]
//! annotate = "frequency"
//! min_edge_count = 0
//!
//! [synth]
//! num_traces = 2000
//! ```
//!
//! Every key is optional. Command-line flags win over the file.

use std::path::{Path, PathBuf};

use ggnn_relevance::dfg::AnnotationKind;
use ggnn_relevance::event_log::{SchemaConfig, SynthSpec, TimestampFormat};
use ggnn_relevance::relevance::ExtremeMode;
use ggnn_relevance::training::TrainConfig;
use ggnn_relevance::{Error, Result};
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    seed: Option<u64>,
    jobs: Option<usize>,
    folds: Option<usize>,
    paths: PathsSection,
    schema: SchemaSection,
    train: TrainSection,
    model: ModelSection,
    dfg: DfgSection,
    synth: SynthSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PathsSection {
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    model: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SchemaSection {
    case_column: Option<String>,
    activity_column: Option<String>,
    timestamp_column: Option<String>,
    label_column: Option<String>,
    timestamp_format: Option<String>,
    positive_label_value: Option<String>,
    negative_label_value: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainSection {
    max_epochs: Option<usize>,
    patience: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    optimizer: Option<String>,
    validation_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModelSection {
    padding: Option<usize>,
    steps: Option<usize>,
    readout: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DfgSection {
    annotate: Option<String>,
    min_edge_count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SynthSection {
    num_traces: Option<usize>,
    alphabet_size: Option<usize>,
    mean_length: Option<f64>,
    planted_activity: Option<usize>,
    plant_rate: Option<f64>,
    noise_rate: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map(|s| format!(" line {}:", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_default();
            Error::Config(format!("config file:{line} {}", e.message()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub folds: Option<usize>,
    pub annotate: Option<AnnotationKind>,
    pub mode: Option<ExtremeMode>,
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub schema: SchemaConfig,
    pub train: TrainConfig,
    pub synth: SynthSpec,
    pub annotate: AnnotationKind,
    pub min_edge_count: usize,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub seed: u64,
    pub jobs: usize,
    pub folds: usize,
    pub mode: Option<ExtremeMode>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl CliConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self> {
        let mut schema = SchemaConfig::default();
        let s = file.schema;
        set(&mut schema.case_column, s.case_column);
        set(&mut schema.activity_column, s.activity_column);
        set(&mut schema.timestamp_column, s.timestamp_column);
        set(&mut schema.label_column, s.label_column);
        set(&mut schema.positive_label_value, s.positive_label_value);
        set(&mut schema.negative_label_value, s.negative_label_value);
        if let Some(p) = s.timestamp_format {
            schema.timestamp_format = TimestampFormat::new(&p);
        }
        schema.validate()?;

        let seed = flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let mut train = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let t = file.train;
        set(&mut train.max_epochs, t.max_epochs);
        set(&mut train.patience, t.patience);
        set(&mut train.batch_size, t.batch_size);
        set(&mut train.learning_rate, t.learning_rate);
        set(&mut train.validation_fraction, t.validation_fraction);
        if let Some(o) = t.optimizer {
            train.optimizer = o.parse()?;
        }
        let m = file.model;
        set(&mut train.model.padding, m.padding);
        set(&mut train.model.steps, m.steps);
        if let Some(r) = m.readout {
            train.model.readout = r.parse()?;
        }
        train.validate()?;

        let mut synth = SynthSpec::default();
        let y = file.synth;
        set(&mut synth.num_traces, y.num_traces);
        set(&mut synth.alphabet_size, y.alphabet_size);
        set(&mut synth.mean_length, y.mean_length);
        set(&mut synth.planted_activity, y.planted_activity);
        set(&mut synth.plant_rate, y.plant_rate);
        set(&mut synth.noise_rate, y.noise_rate);

        let annotate = match (flags.annotate, file.dfg.annotate) {
            (Some(a), _) => a,
            (None, Some(a)) => a.parse()?,
            (None, None) => AnnotationKind::Frequency,
        };
        let jobs = flags.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }

        Ok(Self {
            schema,
            train,
            synth,
            annotate,
            min_edge_count: file.dfg.min_edge_count.unwrap_or(0),
            input: flags.input.or(file.paths.input),
            out: flags.out.or(file.paths.out).unwrap_or_else(|| PathBuf::from(".")),
            model: flags.model.or(file.paths.model),
            seed,
            jobs,
            folds: flags.folds.or(file.folds).unwrap_or(DEFAULT_FOLDS),
            mode: flags.mode,
        })
    }

    pub fn input(&self) -> Result<&Path> {
        let path = self
            .input
            .as_deref()
            .ok_or_else(|| Error::Config("an input log is required (--input)".into()))?;
        if !path.is_file() {
            return Err(Error::Config(format!("input {} does not exist", path.display())));
        }
        Ok(path)
    }

    pub fn model_path(&self) -> Result<&Path> {
        self.model
            .as_deref()
            .ok_or_else(|| Error::Config("a saved model is required (--model)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ggnn_relevance::ggnn::ReadoutMode;
    use ggnn_relevance::training::Optimizer;

    #[test]
    fn defaults_without_file() {
        let c = CliConfig::resolve(FileConfig::default(), Overrides::default()).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.train.seed, DEFAULT_SEED);
        assert_eq!(c.folds, 10);
        assert_eq!(c.jobs, 1);
        assert_eq!(c.annotate, AnnotationKind::Frequency);
        assert_eq!(c.train.max_epochs, 100);
        assert_eq!(c.out, PathBuf::from("."));
    }

    #[test]
    fn file_values_and_flag_precedence() {
        let file = FileConfig::parse(
            r#"
seed = 9
folds = 4

[paths]
input = "a.csv"

[schema]
case_column = "Case ID"
timestamp_format = "ISO8601"

[train]
optimizer = "sgd"
learning_rate = 0.05

[model]
padding = 2
readout = "linear_out"

[dfg]
annotate = "relevance"
"#,
        )
        .unwrap();
        let flags = Overrides {
            seed: Some(3),
            input: Some("b.csv".into()),
            ..Overrides::default()
        };
        let c = CliConfig::resolve(file, flags).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.train.seed, 3);
        assert_eq!(c.folds, 4);
        assert_eq!(c.input, Some(PathBuf::from("b.csv")));
        assert_eq!(c.schema.case_column, "Case ID");
        assert_eq!(c.train.optimizer, Optimizer::Sgd);
        assert_eq!(c.train.learning_rate, 0.05);
        assert_eq!(c.train.model.padding, 2);
        assert_eq!(c.train.model.readout, ReadoutMode::LinearOut);
        assert_eq!(c.annotate, AnnotationKind::Relevance);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(FileConfig::parse("unknown_key = 1").is_err());
        assert!(FileConfig::parse("[train]\nmax_epochs = \"many\"").is_err());
        let bad_opt = FileConfig::parse("[train]\noptimizer = \"rmsprop\"").unwrap();
        assert!(CliConfig::resolve(bad_opt, Overrides::default()).is_err());
        let clash = FileConfig::parse("[schema]\ncase_column = \"x\"\nactivity_column = \"x\"").unwrap();
        assert!(CliConfig::resolve(clash, Overrides::default()).is_err());
    }
}
