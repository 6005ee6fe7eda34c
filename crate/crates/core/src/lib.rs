pub mod channel;
pub mod client;
pub mod config;
pub mod fec;
pub mod format;
pub mod hub;
pub mod link;
pub mod modem;
pub mod queue_sim;
pub mod renderer;
pub mod server;
pub mod window;
