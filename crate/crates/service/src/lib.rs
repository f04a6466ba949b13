//! Vote collection over HTTP.
//!
//! Workers fetch their next assignment and submit one choice per assignment.
//! Votes go to an append-only JSON-lines log that is the service's only
//! state; restarting the service replays it.

pub mod http;
pub mod store;

pub use http::{router, serve, VoteRequest};
pub use store::{Ack, ClientTaskView, NextTask, Progress, StoreError, VoteStore};
