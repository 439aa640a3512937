//! Support library behind the `maglev` binary: the failure
//! classification that drives its exit codes, and the parsers for the
//! sweep flags. Split out from the binary so the parsers can be
//! fuzzed and tested in isolation.

pub mod sweep;

/// What went wrong, classified by exit code: `Domain` is a problem
/// with the inputs' meaning (exit 1), `Io` a problem reading or
/// decoding them at all (exit 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Domain(String),
    Io(String),
}
