//! Simulated civic deliberation over transit-funding policies: a policy
//! catalog, LLM-backed voter agents, voting rules, and the analysis that
//! follows a run.

pub mod catalog;
pub mod gateway;
pub mod metrics;
pub mod oracle;
pub mod regression;
pub mod scenario;
pub mod sentiment;
pub mod voting;
