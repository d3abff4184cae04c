pub mod bitio;
pub mod blockcodec;
pub mod dyadic;
pub mod error;
pub mod gale;
pub mod gen;
pub mod ilfst;
pub mod oracle;

pub use bitio::BitString;
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use gale::MartingaleModel;
