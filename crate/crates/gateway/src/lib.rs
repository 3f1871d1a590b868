//! Live mode: a WebSocket gateway that streams frames to an operator UI and
//! feeds the operator's feedback and door commands into a running trial.

pub mod live;
pub mod protocol;
pub mod server;

pub use live::{LiveHandle, LiveSession};
pub use server::{router, serve, DEFAULT_PORT};
