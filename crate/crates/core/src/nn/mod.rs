//! Layers and composite blocks built on [`crate::tensor`].

mod layers;
mod param;
mod residual;
mod se;

pub use layers::{BatchNorm2d, Conv2d, Linear, Module, BN_EPS, BN_MOMENTUM};
pub(crate) use param::fnv1a;
pub use param::{name_hash, Bindings, ForwardCtx, Param};
pub use residual::{ResidualBlock, Shortcut};
pub use se::SeBlock;
