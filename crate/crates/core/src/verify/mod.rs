//! Verification suites shared by the `check` subcommand and the tests.

pub mod greens;
