//! Coded multiparty matrix multiplication over prime fields.
//!
//! The library shares column-partitioned matrices with polynomial codes,
//! multiplies them among `N` workers of which up to `t` may be malicious, and
//! runs everything over a deterministic round-based network simulator whose
//! transcripts can be audited for privacy.

pub mod adversary;
pub mod audit;
pub mod coins;
pub mod evss;
pub mod gf;
pub mod mpc;
pub mod net;
pub mod poly;
pub mod rscode;
pub mod scenario;
pub mod sharing;
pub mod subroutines;
