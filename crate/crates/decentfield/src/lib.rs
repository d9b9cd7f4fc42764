//! Desk-scale simulator of decentralized radiance-field learning from
//! crowdsourced images.
//!
//! Each user decomposes its views into a shared global field and an on-device
//! personal field. Only the global parameters are federated, weighted by a
//! learned per-user coefficient, and the uploads travel through an additive
//! masking protocol so the server only ever sees the aggregate. The crate
//! bundles the numeric core, the two-branch radiance model, a procedural
//! ground-truth scene generator, the federation loop, the secure-aggregation
//! substrate, a deterministic message-passing harness, and the evaluation
//! metrics used to score photorealism, personal-content leakage, and compute
//! cost.

pub mod federation;
pub mod metrics;
pub mod radiance;
pub mod scenes;
pub mod secagg;
pub mod simnet;
pub mod tensorgrad;
