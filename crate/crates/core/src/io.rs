//! File formats.
//!
//! A sequence is `{"space": "lp:2:3", "items": [[...], ...]}`; an operator is
//! `{"arity": n, "domains": [...], "codomain": "...", "coeffs": [...], "shape": [...]}`
//! with coefficients in row-major order over `shape = (d_1, …, d_n, d_F)`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilinear::{MultilinearMap, MultilinearOp};
use crate::seqclasses::FiniteSeq;
use crate::spaces::Space;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub space: Space,
    pub items: Vec<Vec<f64>>,
}

impl SequenceFile {
    pub fn into_seq(self) -> Result<FiniteSeq> {
        FiniteSeq::new(self.space, self.items)
    }
}

impl From<&FiniteSeq> for SequenceFile {
    fn from(s: &FiniteSeq) -> Self {
        SequenceFile {
            space: s.space(),
            items: s.items().to_vec(),
        }
    }
}

pub fn parse_sequence(text: &str) -> Result<FiniteSeq> {
    serde_json::from_str::<SequenceFile>(text)?.into_seq()
}

pub fn read_sequence(path: impl AsRef<Path>) -> Result<FiniteSeq> {
    parse_sequence(&fs::read_to_string(path)?)
}

pub fn sequence_to_json(s: &FiniteSeq) -> String {
    serde_json::to_string(&SequenceFile::from(s)).expect("sequences serialize")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    pub arity: usize,
    pub domains: Vec<Space>,
    pub codomain: Space,
    pub coeffs: Vec<f64>,
    pub shape: Vec<usize>,
}

impl OperatorFile {
    pub fn into_operator(self) -> Result<MultilinearOp> {
        if self.arity != self.domains.len() {
            return Err(Error::ShapeMismatch(format!(
                "arity {} with {} domains",
                self.arity,
                self.domains.len()
            )));
        }
        let op = MultilinearOp::new(self.domains, self.codomain, self.coeffs)?;
        if op.shape() != self.shape {
            return Err(Error::ShapeMismatch(format!(
                "declared shape {:?}, spaces give {:?}",
                self.shape,
                op.shape()
            )));
        }
        Ok(op)
    }
}

impl From<&MultilinearOp> for OperatorFile {
    fn from(op: &MultilinearOp) -> Self {
        OperatorFile {
            arity: op.arity(),
            domains: op.domains().to_vec(),
            codomain: op.codomain(),
            coeffs: op.coeffs().to_vec(),
            shape: op.shape(),
        }
    }
}

pub fn parse_operator(text: &str) -> Result<MultilinearOp> {
    serde_json::from_str::<OperatorFile>(text)?.into_operator()
}

pub fn read_operator(path: impl AsRef<Path>) -> Result<MultilinearOp> {
    parse_operator(&fs::read_to_string(path)?)
}

pub fn operator_to_json(op: &MultilinearOp) -> String {
    serde_json::to_string(&OperatorFile::from(op)).expect("operators serialize")
}
