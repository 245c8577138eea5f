//! Corpus producers: forge REST client, unified-diff parser and the
//! synthetic generator.

pub mod diff;
pub mod forge;
pub mod synth;

pub use diff::{parse_hunks, parse_unified_diff};
pub use forge::{fetch_remote_reviews, ForgeConfig, LiveTransport, RecordingTransport, TapeTransport, Transport};
pub use synth::{generate_synthetic_corpus, SynthSpec};
