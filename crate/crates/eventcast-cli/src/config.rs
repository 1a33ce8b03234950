//! Pipeline configuration: a TOML file of key-value sections, with every
//! key overridable by the command-line flag of the same name (dots become
//! dashes, e.g. `resample.mode` and `--resample-mode`).
//!
//! One global seed drives the whole run; each module draws its own seed from
//! a labeled substream of it, so a single number reproduces everything.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use eventcast::error::{Error, Result};
use eventcast::learners::{LearnerKind, LearnerParams};
use eventcast::resample::{ResampleMode, ResamplePlan};
use eventcast::rng::StreamRng;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core. The EVENTCAST_THREADS environment
    /// variable overrides this.
    pub threads: usize,
    pub dataset: DatasetConfig,
    pub preprocess: PreprocessConfig,
    pub resample: ResampleConfig,
    pub learner: LearnerConfig,
    pub train: TrainConfig,
    pub selection: SelectionConfig,
    pub events: EventsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            output_dir: PathBuf::from("out"),
            threads: 0,
            dataset: DatasetConfig::default(),
            preprocess: PreprocessConfig::default(),
            resample: ResampleConfig::default(),
            learner: LearnerConfig::default(),
            train: TrainConfig::default(),
            selection: SelectionConfig::default(),
            events: EventsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Published test split; when absent a stratified holdout is taken.
    pub test_path: Option<PathBuf>,
    /// `unsw-nb15`, `cicids-17`, or `infer`.
    pub schema: String,
    /// Label column, needed by `infer`.
    pub label_column: String,
    pub test_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            path: PathBuf::from("data.csv"),
            test_path: None,
            schema: "infer".to_string(),
            label_column: "attack_cat".to_string(),
            test_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub variance_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            variance_threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleConfig {
    pub mode: String,
    pub majority_cap_ratio: f64,
    pub minority_target_ratio: f64,
    /// Explicit resampling seed; omitted means derived from the global seed.
    pub seed: Option<u64>,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            mode: "none".to_string(),
            majority_cap_ratio: 10.0,
            minority_target_ratio: 0.1,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: String,
    pub max_depth: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub n_trees: usize,
    pub bootstrap: bool,
    pub alpha: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        let p = LearnerParams::default();
        LearnerConfig {
            kind: "gbt".to_string(),
            max_depth: p.max_depth,
            n_rounds: p.n_rounds,
            learning_rate: p.learning_rate,
            lambda: p.lambda,
            min_child_weight: p.min_child_weight,
            n_trees: p.n_trees,
            bootstrap: p.bootstrap,
            alpha: p.alpha,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Learners to compare; the best macro F1 (ties: shortest training
    /// time) is saved as the model bundle.
    pub learners: Vec<String>,
    /// Re-iterate the gbt hyper-parameter grid before the final fit.
    pub grid: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learners: vec![
                "tree".to_string(),
                "forest".to_string(),
                "gbt".to_string(),
                "nbayes".to_string(),
            ],
            grid: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// `kbest` or `rfe`.
    pub method: String,
    /// Features kept when training the final bundle; 0 keeps all.
    pub k: usize,
    /// Features dropped per RFE iteration.
    pub step: usize,
    /// Sweep range (k_max 0 means the full feature count).
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            method: "kbest".to_string(),
            k: 0,
            step: 1,
            k_min: 5,
            k_max: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventsConfig {
    /// Enumerate exhaustively up to this many events, sample beyond it.
    pub limit: u64,
    pub n_samples: usize,
    /// `uniform` or `empirical` coordinate marginals.
    pub marginal: String,
    /// Forecast weighting accuracy; omitted means the bundle's holdout
    /// accuracy.
    pub accuracy: Option<f64>,
    /// Print the exact big-integer space size instead of scientific notation.
    pub full_size: bool,
}

impl Default for EventsConfig {
    fn default() -> Self {
        EventsConfig {
            limit: eventcast::events::DEFAULT_ENUM_LIMIT,
            n_samples: eventcast::events::DEFAULT_SAMPLE_SIZE,
            marginal: "uniform".to_string(),
            accuracy: None,
            full_size: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Error::config(format!("config {}: {e}", path.display())))
    }

    /// The root of all randomness in a run.
    pub fn root_rng(&self) -> StreamRng {
        StreamRng::new(self.seed)
    }

    /// Seed for a named module, derived from the global seed.
    pub fn module_seed(&self, label: &str) -> u64 {
        self.root_rng().derive(label).seed()
    }

    pub fn resample_plan(&self) -> Result<ResamplePlan> {
        Ok(ResamplePlan {
            mode: self.resample.mode.parse::<ResampleMode>()?,
            majority_cap_ratio: self.resample.majority_cap_ratio,
            minority_target_ratio: self.resample.minority_target_ratio,
            seed: self
                .resample
                .seed
                .unwrap_or_else(|| self.module_seed("resample")),
        })
    }

    pub fn learner_params(&self) -> LearnerParams {
        LearnerParams {
            max_depth: self.learner.max_depth,
            n_rounds: self.learner.n_rounds,
            learning_rate: self.learner.learning_rate,
            lambda: self.learner.lambda,
            min_child_weight: self.learner.min_child_weight,
            n_trees: self.learner.n_trees,
            bootstrap: self.learner.bootstrap,
            alpha: self.learner.alpha,
            seed: self.module_seed("learner"),
        }
    }

    pub fn train_learners(&self) -> Result<Vec<LearnerKind>> {
        self.train
            .learners
            .iter()
            .map(|s| s.parse::<LearnerKind>())
            .collect()
    }
}

/// Flag-level overrides; every field mirrors a config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true, help = "Global seed; every module seed derives from it")]
    pub seed: Option<u64>,
    #[arg(long, global = true, help = "Directory for artifacts and reports")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, help = "Worker threads (0 = all cores)")]
    pub threads: Option<usize>,

    #[arg(long = "dataset-path", global = true)]
    pub dataset_path: Option<PathBuf>,
    #[arg(long = "dataset-test-path", global = true)]
    pub dataset_test_path: Option<PathBuf>,
    #[arg(long = "dataset-schema", global = true, help = "unsw-nb15 | cicids-17 | infer")]
    pub dataset_schema: Option<String>,
    #[arg(long = "dataset-label-column", global = true)]
    pub dataset_label_column: Option<String>,
    #[arg(long = "dataset-test-fraction", global = true)]
    pub dataset_test_fraction: Option<f64>,

    #[arg(long = "preprocess-variance-threshold", global = true)]
    pub preprocess_variance_threshold: Option<f64>,

    #[arg(long = "resample-mode", global = true, help = "none | under | over | hybrid")]
    pub resample_mode: Option<String>,
    #[arg(long = "resample-majority-cap-ratio", global = true)]
    pub resample_majority_cap_ratio: Option<f64>,
    #[arg(long = "resample-minority-target-ratio", global = true)]
    pub resample_minority_target_ratio: Option<f64>,
    #[arg(long = "resample-seed", global = true)]
    pub resample_seed: Option<u64>,

    #[arg(long = "learner-kind", global = true, help = "tree | forest | gbt | nbayes")]
    pub learner_kind: Option<String>,
    #[arg(long = "learner-max-depth", global = true)]
    pub learner_max_depth: Option<usize>,
    #[arg(long = "learner-n-rounds", global = true)]
    pub learner_n_rounds: Option<usize>,
    #[arg(long = "learner-learning-rate", global = true)]
    pub learner_learning_rate: Option<f64>,
    #[arg(long = "learner-lambda", global = true)]
    pub learner_lambda: Option<f64>,
    #[arg(long = "learner-min-child-weight", global = true)]
    pub learner_min_child_weight: Option<f64>,
    #[arg(long = "learner-n-trees", global = true)]
    pub learner_n_trees: Option<usize>,
    #[arg(long = "learner-alpha", global = true)]
    pub learner_alpha: Option<f64>,

    #[arg(long = "train-learners", global = true, value_delimiter = ',')]
    pub train_learners: Option<Vec<String>>,
    #[arg(long = "train-grid", global = true)]
    pub train_grid: Option<bool>,

    #[arg(long = "selection-method", global = true, help = "kbest | rfe")]
    pub selection_method: Option<String>,
    #[arg(long = "selection-k", global = true)]
    pub selection_k: Option<usize>,
    #[arg(long = "selection-step", global = true)]
    pub selection_step: Option<usize>,
    #[arg(long = "selection-k-min", global = true)]
    pub selection_k_min: Option<usize>,
    #[arg(long = "selection-k-max", global = true)]
    pub selection_k_max: Option<usize>,

    #[arg(long = "events-limit", global = true)]
    pub events_limit: Option<u64>,
    #[arg(long = "events-n-samples", global = true)]
    pub events_n_samples: Option<usize>,
    #[arg(long = "events-marginal", global = true, help = "uniform | empirical")]
    pub events_marginal: Option<String>,
    #[arg(long = "events-accuracy", global = true)]
    pub events_accuracy: Option<f64>,
    #[arg(long = "events-full-size", global = true)]
    pub events_full_size: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, config: &mut PipelineConfig) {
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = &$src {
                    $dst = v.clone();
                }
            };
        }
        set!(self.seed => config.seed);
        set!(self.output_dir => config.output_dir);
        set!(self.threads => config.threads);
        set!(self.dataset_path => config.dataset.path);
        if self.dataset_test_path.is_some() {
            config.dataset.test_path = self.dataset_test_path.clone();
        }
        set!(self.dataset_schema => config.dataset.schema);
        set!(self.dataset_label_column => config.dataset.label_column);
        set!(self.dataset_test_fraction => config.dataset.test_fraction);
        set!(self.preprocess_variance_threshold => config.preprocess.variance_threshold);
        set!(self.resample_mode => config.resample.mode);
        set!(self.resample_majority_cap_ratio => config.resample.majority_cap_ratio);
        set!(self.resample_minority_target_ratio => config.resample.minority_target_ratio);
        if self.resample_seed.is_some() {
            config.resample.seed = self.resample_seed;
        }
        set!(self.learner_kind => config.learner.kind);
        set!(self.learner_max_depth => config.learner.max_depth);
        set!(self.learner_n_rounds => config.learner.n_rounds);
        set!(self.learner_learning_rate => config.learner.learning_rate);
        set!(self.learner_lambda => config.learner.lambda);
        set!(self.learner_min_child_weight => config.learner.min_child_weight);
        set!(self.learner_n_trees => config.learner.n_trees);
        set!(self.learner_alpha => config.learner.alpha);
        set!(self.train_learners => config.train.learners);
        set!(self.train_grid => config.train.grid);
        set!(self.selection_method => config.selection.method);
        set!(self.selection_k => config.selection.k);
        set!(self.selection_step => config.selection.step);
        set!(self.selection_k_min => config.selection.k_min);
        set!(self.selection_k_max => config.selection.k_max);
        set!(self.events_limit => config.events.limit);
        set!(self.events_n_samples => config.events.n_samples);
        set!(self.events_marginal => config.events.marginal);
        if self.events_accuracy.is_some() {
            config.events.accuracy = self.events_accuracy;
        }
        set!(self.events_full_size => config.events.full_size);
    }
}

/// Resolve config file + flag overrides into the effective configuration.
pub fn effective_config(file: Option<&Path>, overrides: &Overrides) -> Result<PipelineConfig> {
    let mut config = match file {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    overrides.apply(&mut config);
    Ok(config)
}
