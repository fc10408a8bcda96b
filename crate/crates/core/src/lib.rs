//! Analysis environment for programs in a flat functional-logic
//! intermediate language.

pub mod analyses;
pub mod exec;
pub mod flat;
pub mod framework;
pub mod graphs;
pub mod ir;
pub mod store;
pub mod testkit;
pub mod views;
