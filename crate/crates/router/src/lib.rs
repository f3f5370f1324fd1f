//! IO, networking and CLI around `warehouse-router-core`: pixmap and JPEG
//! decoding, the TCP frame ingest server, the PLC data-block client with its
//! mock server, throughput measurement, synthetic scenes and the HTTP/WS
//! control service.

pub mod bench;
pub mod config;
pub mod ingest;
pub mod plc;
pub mod pnm;
pub mod render;
pub mod service;
pub mod suites;
pub mod synth;

pub use warehouse_router_core as core;
