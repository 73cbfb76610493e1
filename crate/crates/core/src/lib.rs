pub mod error;
pub mod background;
pub mod exterior;
pub mod expr;
pub mod flows;
pub mod diagnostics;
pub mod structures;
pub mod legendre;
pub mod reduction;
pub mod gaussbonnet;
pub mod io;
pub mod jet;

pub use error::{Error, Result};
pub use jet::Jet;
