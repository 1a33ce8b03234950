// mdbook can't run chapter code blocks as tests, so this shim includes each
// chapter as a module's doc comment and lets `cargo test --doc` do it. One
// module per chapter keeps failures attributable to the chapter they came
// from. The book builds the same files with `mdbook build book/`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/data-model.md")]
pub mod data_model {}

#[doc = include_str!("../../../book/src/discretization.md")]
pub mod discretization {}

#[doc = include_str!("../../../book/src/learners.md")]
pub mod learners {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/feature-selection.md")]
pub mod feature_selection {}

#[doc = include_str!("../../../book/src/event-space.md")]
pub mod event_space {}

#[doc = include_str!("../../../book/src/pipeline-cli.md")]
pub mod pipeline_cli {}
