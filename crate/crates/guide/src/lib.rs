// mdbook cannot run code blocks as tests, so the book's chapters are
// included here as module docs and `cargo test --doc -p patrol-guide`
// exercises every Rust snippet. One module per chapter keeps failures
// attributable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/terrain.md")]
pub mod terrain {}

#[doc = include_str!("../../../book/src/environment.md")]
pub mod environment {}

#[doc = include_str!("../../../book/src/policies.md")]
pub mod policies {}

#[doc = include_str!("../../../book/src/coverage.md")]
pub mod coverage {}

#[doc = include_str!("../../../book/src/learning.md")]
pub mod learning {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
