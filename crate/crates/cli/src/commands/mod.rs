//! One module per subcommand; each exposes `run(&Args) -> Result<()>`.

pub mod bench;
pub mod estimate;
pub mod fig1;
pub mod stabilizer;
pub mod variance;
