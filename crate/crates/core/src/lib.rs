pub mod checks;
pub mod config;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod oracle;
pub mod phantom;
pub mod tomogram;
