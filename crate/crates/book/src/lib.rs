//! The chapters of the user guide in `book/src`, included as doc comments so
//! that `cargo test` compiles and runs every Rust block in them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/dictionary.md")]
pub mod dictionary {}
#[doc = include_str!("../../../book/src/lasso.md")]
pub mod lasso {}
#[doc = include_str!("../../../book/src/coupling.md")]
pub mod coupling {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
