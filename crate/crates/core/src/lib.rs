//! Mining partially ordered runs and high-level system nets from event logs
//! by composing Petri net modules.

pub mod algebra;
pub mod composition;
pub mod export;
pub mod iso;
pub mod lifting;
pub mod logkit;
pub mod net;
pub mod occurrence;
pub mod pipeline;
