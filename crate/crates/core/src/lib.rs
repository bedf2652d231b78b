//! Core building blocks for an immersive-media decode pipeline:
//!
//! * [`stream`] — a deterministic toy elementary-stream format with a binary
//!   container, standing in for real coded video.
//! * [`target_decoder`] — discrete-event simulation of the classical
//!   program-stream System Target Decoder (input buffer, decode and
//!   presentation events, conformance verdicts).
//! * [`engine`] — a video decoding engine abstraction: aggregate capability
//!   accounting, decoder instance lifecycle, and time-locked instance groups.
//! * [`formatting`] — bitstream-to-bitstream input formatting (filter,
//!   insert, append, stack) that decouples source stream count from decoder
//!   instance count.
//! * [`circular`] — a bounded frame store with independent read/write
//!   pointers, variable-length frames and overwrite-on-wrap.
//! * [`scene`] — a glTF-2.0-subset scene model with MPEG media extensions,
//!   validation, media request collection and world-transform flattening.
//! * [`updates`] — transactional JSON Patch scene updates with automatic
//!   index-reference repair.
//! * [`pipeline`] — the media access pipeline tying scenes, formatting,
//!   decoder instances and circular buffers together, with synchronization
//!   metrics.
//!
//! The crate is `no_std` + `alloc`: all simulation time is integer ticks and
//! nothing here performs IO. File handling, the CLI, and the threaded
//! scenario runner live in the companion `xrpipe` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod circular;
pub mod decode;
pub mod engine;
pub mod formatting;
pub mod math;
pub mod pipeline;
pub mod report;
pub mod scene;
pub mod stream;
pub mod target_decoder;
pub mod updates;

mod mix;

pub use mix::splitmix64;
