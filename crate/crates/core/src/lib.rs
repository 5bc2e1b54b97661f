pub mod corpus;
pub mod grammar;
pub mod ingest;
pub mod kernel;
pub mod modelcheck;
pub mod selfmodel;
pub mod treesys;
