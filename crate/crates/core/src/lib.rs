pub mod error;
pub mod io;
pub mod multilinear;
pub mod optim;
pub mod propcheck;
pub mod repro;
pub mod seqclasses;
pub mod spaces;
