//! Live sessions over HTTP and the `prefer` command-line tool.

pub mod api;
pub mod cli;
pub mod session;
pub mod store;

pub use api::{router, serve, AppState};
pub use session::{Engine, ServiceError, Session, SessionConfig, SummaryView};
pub use store::Store;
