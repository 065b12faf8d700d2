pub mod gateway;
pub mod graph;
pub mod text;
pub mod vector;
pub mod indexer;
pub mod retriever;
pub mod causal;
pub mod eval;
