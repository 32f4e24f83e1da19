//! Holds the `acceptance` test target. Run it with
//! `cargo test -p seqnorm-validation --test acceptance`.
