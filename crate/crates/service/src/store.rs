//! Append-only JSON-lines log per session.
//!
//! Every state change is written and flushed before it is applied in
//! memory, so a restarted server rebuilds each session by replaying its log.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use prefer_core::simplex::AspectVector;
use serde::{Deserialize, Serialize};

use crate::session::{Engine, Result, ServiceError, Session, SessionConfig, SummaryView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        session_id: String,
        config: SessionConfig,
        products: Vec<String>,
        k: usize,
        created_at: u64,
    },
    SummaryIssued {
        summary: SummaryView,
    },
    FeedbackApplied {
        summary_id: String,
        f: f64,
        w_hat: AspectVector,
    },
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.jsonl"))
    }

    pub fn append(&self, session_id: &str, event: &Event) -> Result<()> {
        let mut line = serde_json::to_string(event).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut file = OpenOptions::new().create(true).append(true).open(self.path(session_id))?;
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }

    /// Rebuilds every logged session against `engine`.
    pub fn load_all(&self, engine: &Engine) -> Result<Vec<Session>> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        paths.iter().map(|p| replay(p, engine)).collect()
    }
}

fn corrupt(session: &str, message: impl Into<String>) -> ServiceError {
    ServiceError::CorruptLog {
        session: session.to_string(),
        message: message.into(),
    }
}

/// Replays one log. Ratings are re-applied through the learner and the
/// resulting estimate must match the logged one exactly.
pub fn replay(path: &Path, engine: &Engine) -> Result<Session> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut session: Option<Session> = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event =
            serde_json::from_str(&line).map_err(|e| corrupt(&name, format!("line {}: {e}", n + 1)))?;
        match (event, session.as_mut()) {
            (
                Event::Created {
                    session_id,
                    config,
                    products,
                    k,
                    created_at,
                },
                None,
            ) => {
                if k != engine.k() {
                    return Err(corrupt(&name, format!("logged K={k} but the catalog has K={}", engine.k())));
                }
                let mut s = engine.create(session_id, config, created_at)?;
                s.products = products;
                session = Some(s);
            }
            (Event::SummaryIssued { summary }, Some(s)) => engine.issue(s, summary)?,
            (Event::FeedbackApplied { summary_id, f, w_hat }, Some(s)) => {
                let out = engine.submit(s, &summary_id, f)?;
                if out.w_hat != w_hat {
                    return Err(corrupt(&name, format!("estimate diverged at {summary_id}")));
                }
            }
            _ => return Err(corrupt(&name, format!("line {}: event out of order", n + 1))),
        }
    }
    session.ok_or_else(|| corrupt(&name, "empty log"))
}
