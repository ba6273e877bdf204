//! File formats, pipeline drivers and command implementations behind the
//! `aeromosaic` binary.
//!
//! Dataset layout (as produced by `simulate` and consumed by the other
//! commands): a flat directory holding the frame images (`frame_###.png`,
//! lexicographic order matches ascending capture times), `captures.csv`,
//! `imu.csv`, `calib.txt`, `flight.spec` and `ground_truth.txt`.

pub mod commands;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;

pub use error::CliError;
