use serde::{Deserialize, Serialize};

use super::{run_tasks, ChanceLevels, Task, TaskReport};
use crate::error::{Error, Result};
use crate::model::{init_params, ModelParams, NetworkConfig};
use crate::rng::{self, phase};
use crate::sampler::SamplerSettings;
use crate::scene::DatasetSplit;
use crate::trainer::{init_visible_biases, train, HyperParams, TrainHistory};

const TASKS: [Task; 3] = [Task::Relations, Task::MissingObject, Task::OutOfContext];

/// One trained model evaluated on tasks 1–3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub seed: u64,
    pub history: TrainHistory,
    pub reports: Vec<TaskReport>,
}

impl ComparisonRow {
    pub fn metric(&self, task: Task) -> Option<f64> {
        self.reports.iter().find(|r| r.task == task).map(|r| r.metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub models: Vec<String>,
    pub seeds: Vec<u64>,
    pub chance: ChanceLevels,
    pub rows: Vec<ComparisonRow>,
}

/// Trains every config under every seed on the same split and runs tasks 1–3
/// on the test set. Returns the trained parameters alongside the table, in
/// seed-major order.
pub fn compare_models(
    configs: &[NetworkConfig],
    split: &DatasetSplit,
    hyper: &HyperParams,
    settings: &SamplerSettings,
    seeds: &[u64],
) -> Result<(Comparison, Vec<ModelParams<f64>>)> {
    if seeds.is_empty() || configs.is_empty() {
        return Err(Error::Config("need at least one model and one seed".into()));
    }
    let mut rows = Vec::new();
    let mut trained = Vec::new();
    for &seed in seeds {
        for config in configs {
            let mut init = init_params(*config, &mut rng::stream(seed, &[phase::INIT]))?;
            init_visible_biases(&mut init, &split.train)?;
            let h = HyperParams { seed, ..*hyper };
            let (params, history) = train(&init, &split.train, &split.validation, &h)?;
            let reports = run_tasks(&params, &split.test, settings, seed)?.to_vec();
            rows.push(ComparisonRow { model: config.kind().label().into(), seed, history, reports });
            trained.push(params);
        }
    }
    let models = configs.iter().map(|c| c.kind().label().to_string()).collect();
    let table = Comparison { models, seeds: seeds.to_vec(), chance: ChanceLevels::of(&configs[0]), rows };
    Ok((table, trained))
}

impl Comparison {
    pub fn metric(&self, model: &str, seed: u64, task: Task) -> Option<f64> {
        self.rows.iter().find(|r| r.model == model && r.seed == seed).and_then(|r| r.metric(task))
    }

    pub fn mean(&self, model: &str, task: Task) -> Option<f64> {
        let xs: Vec<f64> = self.seeds.iter().filter_map(|&s| self.metric(model, s, task)).collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    }

    /// Models from best to worst on `task` under `seed`.
    pub fn ordering(&self, task: Task, seed: u64) -> Vec<String> {
        let mut ms: Vec<(String, f64)> =
            self.models.iter().filter_map(|m| Some((m.clone(), self.metric(m, seed, task)?))).collect();
        ms.sort_by(|a, b| {
            let o = a.1.total_cmp(&b.1);
            if task.lower_is_better() {
                o
            } else {
                o.reverse()
            }
        });
        ms.into_iter().map(|(m, _)| m).collect()
    }

    /// Aligned plain-text tables, one per task: a row per seed, the mean, the
    /// chance level and each seed's ordering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for task in TASKS {
            let chance = self.chance.for_task(task);
            out += &format!("Task {} ({})\n", task as u8, task.name());
            out += &format!("{:<8}", "seed");
            for m in &self.models {
                out += &format!("{m:>12}");
            }
            out += &format!("{:>14}  ordering\n", "chance");
            for &seed in &self.seeds {
                out += &format!("{seed:<8}");
                for m in &self.models {
                    match self.metric(m, seed, task) {
                        Some(x) => out += &format!("{x:>12.4}"),
                        None => out += &format!("{:>12}", "-"),
                    }
                }
                out += &format!("{chance:>14.4e}  {}\n", self.ordering(task, seed).join(" > "));
            }
            out += &format!("{:<8}", "mean");
            for m in &self.models {
                out += &format!("{:>12.4}", self.mean(m, task).unwrap_or(f64::NAN));
            }
            out += &format!("{chance:>14.4e}\n");
            if task == Task::MissingObject {
                out += &format!("(uniform top-1 chance 1/V; 1/V^2 = {:.4e})\n", self.chance.task2_quoted);
            }
            out += "\n";
        }
        out
    }

    /// Long-format CSV; chance levels appear as model `chance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,model,seed,metric\n");
        for task in TASKS {
            for &seed in &self.seeds {
                for m in &self.models {
                    if let Some(x) = self.metric(m, seed, task) {
                        out += &format!("{},{m},{seed},{x}\n", task as u8);
                    }
                }
            }
            out += &format!("{},chance,,{}\n", task as u8, self.chance.for_task(task));
        }
        out
    }
}
