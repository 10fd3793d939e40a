pub mod correlation;
pub mod equivalence;
pub mod error;
pub mod flowcore;
pub mod flowio;
pub mod objective;
pub mod pipeline;
pub mod synthetic;
pub mod upsample;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/grids.md")]
    struct Grids;
    #[doc = include_str!("../../../book/src/correlation.md")]
    struct Correlation;
    #[doc = include_str!("../../../book/src/upsampling.md")]
    struct Upsampling;
    #[doc = include_str!("../../../book/src/pipeline.md")]
    struct Pipeline;
    #[doc = include_str!("../../../book/src/objective.md")]
    struct Objective;
    #[doc = include_str!("../../../book/src/formats.md")]
    struct Formats;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
