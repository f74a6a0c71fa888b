//! HTTP service and command-line front end for the trackmark annotation
//! engine.

pub mod cli;
pub mod http;
pub mod render;
