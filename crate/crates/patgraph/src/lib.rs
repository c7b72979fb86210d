//! Dense retrieval engine for patent prior-art search.
//!
//! Patent documents are converted into invention graphs (features plus the
//! part-of / example-of / functional relationships between them), embedded
//! with a sparse Graph Transformer trained on examiner citation triples, and
//! retrieved by exact nearest-neighbor search. An Okapi BM25 index provides
//! the lexical baseline.
//!
//! The crate is organized along the pipeline:
//!
//! - [`graph`]: the invention-graph data model, validation and adjacency
//! - [`parser`]: rule-based conversion of claim/description text into graphs
//! - [`tokenizer`]: byte-pair-encoding tokenizer trained on node texts
//! - [`autodiff`]: reverse-mode automatic differentiation over dense tensors
//! - [`encoder`]: SWEM init, Graph Transformer layers, pooling, MoE reduction
//! - [`trainer`]: triplet-loss training with online hard negative mining
//! - [`retrieval`]: exact k-NN vector index and the BM25 baseline
//! - [`eval`]: Recall@k and nDCG@k over citation ground truth
//! - [`synth`]: deterministic synthetic corpus generator
//! - [`cli`]: subcommand implementations driving the full pipeline

pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod jsonl;
pub mod manifest;
pub mod parser;
pub mod retrieval;
pub mod synth;
pub mod tokenizer;
pub mod trainer;

pub use error::Error;
pub use graph::{Edge, EdgeKind, GraphKind, InventionGraph, Node, NodeId, NodeRole};
pub use parser::PatentDocument;
pub use trainer::{CitationCategory, CitationRecord};
