//! Versioned JSON model files.
//!
//! ```json
//! {
//!   "format": "ggnn-relevance-model",
//!   "version": 1,
//!   "hidden_dim": 17,
//!   "steps": 5,
//!   "readout": "literal",
//!   "vocabulary": ["A", "B"],
//!   "blocks": [{"name": "edge.recursive.out.weight", "shape": [17, 17], "data": [...]}]
//! }
//! ```
//!
//! Numbers are written in shortest round-trip form, so loading a saved model
//! reproduces every parameter bit for bit.

use serde::{Deserialize, Serialize};

use super::{GgnnParams, ReadoutMode};
use crate::error::{Error, Result};
use crate::instance_graph::ActivityVocabulary;

const FORMAT: &str = "ggnn-relevance-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    hidden_dim: usize,
    steps: usize,
    readout: String,
    vocabulary: Vec<String>,
    blocks: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct Block {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

pub fn save_model(params: &GgnnParams, vocab: &ActivityVocabulary) -> String {
    let file = ModelFile {
        format: FORMAT.into(),
        version: VERSION,
        hidden_dim: params.hidden_dim,
        steps: params.steps,
        readout: params.readout.name().into(),
        vocabulary: vocab.activities().to_vec(),
        blocks: params
            .blocks()
            .into_iter()
            .map(|(name, m)| Block {
                name,
                shape: [m.rows(), m.cols()],
                data: m.as_slice().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serialisation cannot fail")
}

pub fn load_model(text: &str) -> Result<(GgnnParams, ActivityVocabulary)> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if file.format != FORMAT {
        return Err(Error::ModelFormat(format!("unexpected format {:?}", file.format)));
    }
    if file.version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {}", file.version)));
    }
    let readout: ReadoutMode = file
        .readout
        .parse()
        .map_err(|_| Error::ModelFormat(format!("unknown readout {:?}", file.readout)))?;
    let vocab = ActivityVocabulary::from_activities(file.vocabulary.iter().cloned());
    if vocab.activities() != file.vocabulary.as_slice() {
        return Err(Error::ModelFormat(
            "vocabulary must be sorted and duplicate-free".into(),
        ));
    }
    if file.hidden_dim < vocab.size() {
        return Err(Error::ModelFormat(format!(
            "hidden dimension {} below vocabulary size {}",
            file.hidden_dim,
            vocab.size()
        )));
    }

    let mut params = GgnnParams::zeros(file.hidden_dim, file.steps, readout);
    let names: Vec<String> = params.blocks().into_iter().map(|(n, _)| n).collect();
    if file.blocks.len() != names.len() {
        return Err(Error::ModelFormat(format!(
            "expected {} parameter blocks, found {}",
            names.len(),
            file.blocks.len()
        )));
    }
    for ((slot, name), block) in params.blocks_mut().into_iter().zip(&names).zip(&file.blocks) {
        if &block.name != name {
            return Err(Error::ModelFormat(format!(
                "expected block {name}, found {}",
                block.name
            )));
        }
        if block.shape != [slot.rows(), slot.cols()] || block.data.len() != slot.as_slice().len() {
            return Err(Error::ModelFormat(format!("block {name} has the wrong shape")));
        }
        slot.as_mut_slice().copy_from_slice(&block.data);
    }
    Ok((params, vocab))
}
