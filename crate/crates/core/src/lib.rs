pub mod error;
pub mod optimize;
pub mod wind;
pub mod metrics;
pub mod queue;
pub mod thermal;
pub mod procurement;
pub mod sim;
pub mod config;
pub mod cli;
