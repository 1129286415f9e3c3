#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod evaluation;
pub mod milp;
pub mod model;
pub mod optimize;
pub mod pipeline;
pub mod synthetic;
pub mod thermal;
pub mod uncertainty;
