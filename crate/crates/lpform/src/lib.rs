//! A compiler middle-end built around a deterministic, single-moded
//! logic-programming intermediate representation ("LP form").
//!
//! The pipeline: parse three-address code ([`tac`]), translate to LP
//! form ([`translate`]), validate and interpret it ([`lpir`]), analyze
//! it ([`neededness`], [`interval`]), simplify it ([`simplify`]), and
//! lower it to a pseudo-assembly with last-call optimisation
//! ([`lower`]). Every stage has a reference interpreter so the stages
//! can be checked against each other on concrete inputs.

pub mod fault;
pub mod interval;
pub mod lower;
pub mod lpir;
pub mod neededness;
pub mod ops;
pub mod simplify;
pub mod tac;
pub mod translate;
