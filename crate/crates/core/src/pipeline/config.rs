use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{preset, StackConfig};
use crate::learners::{Family, Hyperparameters, Task};
use crate::plume::ScenarioConfig;
use crate::tuning::{SearchSettings, SearchSpace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSelection {
    Classification,
    Regression,
    Both,
}

impl TaskSelection {
    pub fn tasks(self) -> Vec<Task> {
        match self {
            TaskSelection::Classification => vec![Task::Classification],
            TaskSelection::Regression => vec![Task::Regression],
            TaskSelection::Both => vec![Task::Classification, Task::Regression],
        }
    }
}

/// Stack choice for one task: a named preset, optionally re-layered, or an
/// explicit stack.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSettings {
    pub preset: Option<String>,
    /// Stack depth; layers past the preset's own are copies of its last layer.
    pub layers: Option<usize>,
    pub stack: Option<StackConfig>,
}

impl TaskSettings {
    pub fn resolve(&self, task: Task) -> Result<StackConfig> {
        let config = match (&self.stack, &self.preset) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either a preset or an explicit stack, not both".into()))
            }
            (Some(stack), None) => stack.clone(),
            (None, Some(name)) => preset(name)?,
            (None, None) => preset(match task {
                Task::Classification => "paper-classification",
                Task::Regression => "paper-regression",
            })?,
        };
        if config.task != task {
            return Err(Error::Config(format!(
                "stack for {task:?} is configured as a {:?} stack",
                config.task
            )));
        }
        match self.layers {
            Some(depth) => config.with_depth(depth),
            None => Ok(config),
        }
    }
}

/// The `[search]` section: which learner to tune and over what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub task: Task,
    pub family: Family,
    /// Fixed hyperparameters; searched ones override these.
    #[serde(default)]
    pub base: Hyperparameters,
    pub space: SearchSpace,
    #[serde(default)]
    pub settings: SearchSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every stochastic stage draws from a named substream.
    pub seed: u64,
    pub task: TaskSelection,
    pub out: PathBuf,
    /// Existing scenario CSV. Mutually exclusive with `scenario`.
    pub data: Option<PathBuf>,
    /// Generator settings (its own seed is replaced by the master seed).
    pub scenario: Option<ScenarioConfig>,
    pub train_fraction: f64,
    pub stratify: bool,
    /// Timesteps (the `time` column, minutes) withheld from training for
    /// grid export.
    pub holdout_times: Vec<f64>,
    pub classification: TaskSettings,
    pub regression: TaskSettings,
    pub search: Option<SearchSection>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            task: TaskSelection::Both,
            out: PathBuf::from("runs/default"),
            data: None,
            scenario: None,
            train_fraction: 0.8,
            stratify: false,
            holdout_times: vec![300.0, 312.0, 324.0],
            classification: TaskSettings::default(),
            regression: TaskSettings::default(),
            search: None,
        }
    }
}

/// Where the rows come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Scenario(ScenarioConfig),
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.is_some() && self.scenario.is_some() {
            return Err(Error::Config("give either `data` or `[scenario]`, not both".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        for task in self.task.tasks() {
            self.stack_for(task)?.validate()?;
        }
        if let Some(search) = &self.search {
            search.space.validate()?;
        }
        Ok(())
    }

    /// The data source, defaulting to the standard scenario.
    pub fn source(&self) -> DataSource {
        match &self.data {
            Some(path) => DataSource::Csv(path.clone()),
            None => DataSource::Scenario(ScenarioConfig {
                seed: self.seed,
                ..self.scenario.clone().unwrap_or_default()
            }),
        }
    }

    pub fn task_settings(&self, task: Task) -> &TaskSettings {
        match task {
            Task::Classification => &self.classification,
            Task::Regression => &self.regression,
        }
    }

    pub fn task_settings_mut(&mut self, task: Task) -> &mut TaskSettings {
        match task {
            Task::Classification => &mut self.classification,
            Task::Regression => &mut self.regression,
        }
    }

    pub fn stack_for(&self, task: Task) -> Result<StackConfig> {
        self.task_settings(task).resolve(task)
    }

    /// Apply a `--preset` flag: a full preset name sets that task's preset;
    /// a family prefix (`paper`, `fast`) sets both.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let as_task = |n: &str| preset(n).map(|c| c.task);
        if let Ok(task) = as_task(name) {
            let settings = self.task_settings_mut(task);
            settings.preset = Some(name.to_string());
            settings.stack = None;
            return Ok(());
        }
        let cls = format!("{name}-classification");
        let reg = format!("{name}-regression");
        if as_task(&cls).is_err() || as_task(&reg).is_err() {
            return Err(Error::InvalidArgument(format!("unknown preset {name:?}")));
        }
        for (task, full) in [(Task::Classification, cls), (Task::Regression, reg)] {
            let settings = self.task_settings_mut(task);
            settings.preset = Some(full);
            settings.stack = None;
        }
        Ok(())
    }

    pub fn apply_layers(&mut self, layers: usize) {
        self.classification.layers = Some(layers);
        self.regression.layers = Some(layers);
    }
}
