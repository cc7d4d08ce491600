//! Toolkit for conservative valued constraint languages.
//!
//! Represents finite valued constraint languages with exact rational costs,
//! builds the pair graph of a language from a budgeted binary fragment of its
//! expressive power, searches and verifies STP / MJN multimorphism
//! certificates, and classifies languages as tractable, NP-hard, or unknown at
//! the given budget. Every construction can be checked against a brute-force
//! solver.

pub mod certificate;
pub mod classify;
pub mod cli;
pub mod cost;
pub mod error;
pub mod express;
pub mod function;
pub mod gen;
pub mod graph;
pub mod language;
pub mod mjn;
pub mod ops;
pub mod reduce;
pub mod solver;

pub use cost::{Cost, Rational};
pub use error::{Error, Result};
pub use function::{CostFunction, Tuples};
pub use language::{evaluate, Assignment, Instance, Language, Term, UnaryClosure};
