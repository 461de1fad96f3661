//! Holds the `acceptance` integration test target, which runs the
//! end-to-end checks against real and synthetic data. Kept in its own
//! package so that its long, data-dependent runs come after the unit and
//! property tests of the other crates.
