//! Multilingual text-to-SQL toolkit: dataset model, SQL matching, schema
//! linking, model backends and data augmentation.

pub mod model;
pub mod sql;
pub mod linker;
pub mod backend;
pub mod augment;
pub mod prep;
