//! The chapters of the guide in `book/src`, compiled as doc-tests so that
//! every snippet is built and run by `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/game.md")]
pub mod game {}
#[doc = include_str!("../../../book/src/hypermedia.md")]
pub mod hypermedia {}
#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
#[doc = include_str!("../../../book/src/rdf.md")]
pub mod rdf {}
#[doc = include_str!("../../../book/src/learning.md")]
pub mod learning {}
#[doc = include_str!("../../../book/src/advice.md")]
pub mod advice {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
