pub mod field;
pub mod linalg;
pub mod forms;
pub mod io;
pub mod qrank;
pub mod quadspace;
pub mod degeneration;
pub mod witness;
pub mod suites;
