pub mod bath;
pub mod config;
pub mod io;
pub mod runner;
pub mod generators;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod propagate;
pub mod quad;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/baths.md")]
    mod baths {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
