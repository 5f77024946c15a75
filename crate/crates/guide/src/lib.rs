//! Doc-test shim for the guide: every chapter of `book/` is attached to
//! a module here, so `cargo test` runs the book's code samples and the
//! prose can never drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}

#[doc = include_str!("../../../book/src/fundamental-systems.md")]
pub mod fundamental_systems {}

#[doc = include_str!("../../../book/src/weyl-disks.md")]
pub mod weyl_disks {}

#[doc = include_str!("../../../book/src/cayley-charts.md")]
pub mod cayley_charts {}

#[doc = include_str!("../../../book/src/volterra-route.md")]
pub mod volterra_route {}

#[doc = include_str!("../../../book/src/high-energy-expansions.md")]
pub mod high_energy_expansions {}

#[doc = include_str!("../../../book/src/greens-matrix.md")]
pub mod greens_matrix {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
