pub mod circuit;
pub mod cli;
pub mod cnfsys;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod partition;
pub mod pipeline;
pub mod table;
pub mod treebuild;
