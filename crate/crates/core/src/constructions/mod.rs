//! Ball embeddings built from isotopies: the chain map `G`, unwrapped and
//! wrapped balls, the Z-assembly and the parametrized families.

pub mod chain;
pub mod families;
pub mod lisa;
pub mod monitor;
pub mod quotient;
pub mod wrap;
pub mod zassembly;

pub use chain::*;
pub use families::*;
pub use lisa::*;
pub use monitor::*;
pub use quotient::*;
pub use wrap::*;
pub use zassembly::*;
