//! Iterative detection and decoding for coded ODDM over doubly-selective
//! channels.

pub mod analysis;
pub mod channel;
pub mod detector;
pub mod error;
pub mod frame;
pub mod harness;
pub mod ldpc;
pub mod modem;
pub mod receiver;

pub use channel::{ChannelRealization, Path};
pub use error::{Error, Result};
pub use frame::{FrameConfig, Interleaver, QamConstellation, SoftSymbolVector};
pub use harness::{Experiment, ExperimentConfig, SnrDb};
pub use ldpc::{DecoderConfig, LdpcCode};
pub use modem::DdGrid;
