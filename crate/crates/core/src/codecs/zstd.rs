//! zstd through the external adapter interface (feature `zstd`).

use std::sync::Arc;

use super::{CodecRegistry, ExternalAdapter};
use crate::error::Result;

pub const ZSTD_ID: u16 = 16;
pub const DEFAULT_LEVEL: i32 = 3;

pub fn adapter(level: i32) -> ExternalAdapter {
    ExternalAdapter::new(
        ZSTD_ID,
        "zstd",
        move |input| zstd::bulk::compress(input, level).map_err(|e| e.to_string()),
        |input| zstd::stream::decode_all(input).map_err(|e| e.to_string()),
    )
}

/// Registers the adapter at `level` under id 16.
pub fn register(registry: &mut CodecRegistry, level: i32) -> Result<()> {
    registry.register_external(Arc::new(adapter(level)))?;
    Ok(())
}
