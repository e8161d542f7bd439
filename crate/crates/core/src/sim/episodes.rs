//! Line-delimited JSON records: one annotated step per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Action, ScreenId, StepRef, TaskId, World};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub task_id: TaskId,
    pub step_index: usize,
    pub screen_id: ScreenId,
    pub goal: String,
    pub subgoal: String,
    pub gt_action: Action,
    pub history: Vec<Action>,
}

impl StepRecord {
    /// The teacher-forced record for a ground-truth step.
    pub fn from_world(world: &World, r: StepRef) -> Result<Self> {
        let task = world.task(r.task_id)?;
        let spec = world.step_spec(r)?;
        Ok(Self {
            task_id: r.task_id,
            step_index: r.step_index,
            screen_id: spec.screen_id,
            goal: task.goal.clone(),
            subgoal: spec.subgoal.clone(),
            gt_action: spec.gt_action.clone(),
            history: world.gt_history(r)?,
        })
    }

    pub fn step_ref(&self) -> StepRef {
        StepRef { task_id: self.task_id, step_index: self.step_index }
    }
}

pub fn save_records<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Read one JSON record per non-blank line; errors carry the 1-based line.
pub fn load_records<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        out.push(record);
    }
    Ok(out)
}

pub fn save_episodes(path: impl AsRef<Path>, episodes: &[StepRecord]) -> Result<()> {
    save_records(path, episodes)
}

pub fn load_episodes(path: impl AsRef<Path>) -> Result<Vec<StepRecord>> {
    load_records(path)
}
