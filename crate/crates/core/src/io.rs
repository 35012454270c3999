//! JSON file formats for chains, motion plans and sampled frames.
//!
//! Chain: `{"closed": bool, "vertices": [[x, y, z], ...]}` (z optional).
//! Plan: `{"initial": <chain>, "moves": [{"kind": ..., ...}]}`.
//! Frames: `{"frames": [{"t": number, "vertices": [[x, y, z], ...]}]}`.
//! Floats are written with shortest round-trip formatting, so reading a
//! file back yields bit-identical values.

use serde::{Deserialize, Serialize};

use crate::chain::{make_chain, ChainConfig};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::motion::{Move, MotionPlan};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub closed: bool,
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub initial: ChainFile,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub vertices: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FramesFile {
    pub frames: Vec<Frame>,
}

impl ChainFile {
    pub fn from_config(config: &ChainConfig) -> Self {
        ChainFile {
            closed: config.is_closed(),
            vertices: config.vertices().iter().map(|p| p.to_array().to_vec()).collect(),
        }
    }

    pub fn to_config(&self) -> Result<ChainConfig> {
        let verts = self
            .vertices
            .iter()
            .enumerate()
            .map(|(k, v)| match v.as_slice() {
                [x, y] => Ok(Point::new(*x, *y, 0.0)),
                [x, y, z] => Ok(Point::new(*x, *y, *z)),
                _ => Err(Error::Format(format!("vertex {k} must have 2 or 3 coordinates"))),
            })
            .collect::<Result<Vec<_>>>()?;
        make_chain(verts, self.closed)
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

fn render<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn chain_from_json(text: &str) -> Result<ChainConfig> {
    parse::<ChainFile>(text)?.to_config()
}

pub fn chain_to_json(config: &ChainConfig) -> String {
    render(&ChainFile::from_config(config))
}

pub fn plan_from_json(text: &str) -> Result<MotionPlan> {
    let file: PlanFile = parse(text)?;
    Ok(MotionPlan { initial: file.initial.to_config()?, moves: file.moves })
}

pub fn plan_to_json(plan: &MotionPlan) -> String {
    render(&PlanFile { initial: ChainFile::from_config(&plan.initial), moves: plan.moves.clone() })
}

pub fn frames_to_json(frames: &[(f64, ChainConfig)]) -> String {
    let frames = frames
        .iter()
        .map(|(t, c)| Frame { t: *t, vertices: c.vertices().iter().map(|p| p.to_array()).collect() })
        .collect();
    render(&FramesFile { frames })
}

pub fn frames_from_json(text: &str) -> Result<FramesFile> {
    parse(text)
}
