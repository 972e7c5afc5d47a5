//! Command-line front end for the marginal-function toolkit.

pub mod report;
pub mod run;
pub mod spec;
