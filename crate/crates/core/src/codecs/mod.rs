//! Compression back-ends behind one interface.
//!
//! Built-in codecs (always available, ids below 16):
//!
//! | id | name        | technique                                   |
//! |----|-------------|---------------------------------------------|
//! | 1  | `store`     | verbatim copy                               |
//! | 2  | `lz77`      | sliding-window dictionary coder             |
//! | 3  | `huffman`   | canonical Huffman over bytes                |
//! | 4  | `xor_delta` | Gorilla-style XOR against the previous word |
//!
//! External compressors register with ids 16 and above. Every codec produces
//! self-contained streams; stream layouts are documented in `docs/codecs.md`.

pub mod bits;
pub mod huffman;
pub mod lz77;
pub mod store;
pub mod xor_delta;
#[cfg(feature = "zstd")]
pub mod zstd;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::typed::FloatWidth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CodecId(pub u16);

impl CodecId {
    pub const STORE: CodecId = CodecId(1);
    pub const LZ77: CodecId = CodecId(2);
    pub const HUFFMAN: CodecId = CodecId(3);
    pub const XOR_DELTA: CodecId = CodecId(4);
    pub const FIRST_EXTERNAL: u16 = 16;

    pub const FOUNDATIONAL: [CodecId; 3] = [CodecId::LZ77, CodecId::HUFFMAN, CodecId::XOR_DELTA];
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecParams {
    /// LZ77 window in bytes; a power of two, at least 256.
    pub lz77_window: usize,
    pub lz77_min_match: usize,
    /// Defer a match by one byte when the next position matches longer.
    pub lz77_lazy: bool,
    pub xor_word_width: FloatWidth,
}

impl Default for CodecParams {
    fn default() -> Self {
        CodecParams {
            lz77_window: 64 * 1024,
            lz77_min_match: 3,
            lz77_lazy: false,
            xor_word_width: FloatWidth::SINGLE,
        }
    }
}

impl CodecParams {
    pub fn validate(&self) -> Result<()> {
        if self.lz77_window < 256 || !self.lz77_window.is_power_of_two() || self.lz77_window > 1 << 24 {
            return Err(Error::InvalidParams(format!(
                "lz77 window {} must be a power of two in 256..=16MiB",
                self.lz77_window
            )));
        }
        if !(3..=255).contains(&self.lz77_min_match) {
            return Err(Error::InvalidParams(format!(
                "lz77 min match {} must be in 3..=255",
                self.lz77_min_match
            )));
        }
        Ok(())
    }
}

pub trait Codec: Send + Sync {
    fn id(&self) -> CodecId;

    fn name(&self) -> &str;

    fn compress(&self, params: &CodecParams, input: &[u8]) -> Result<Vec<u8>>;

    fn decompress(&self, input: &[u8]) -> Result<Vec<u8>>;
}

type CodecFn = dyn Fn(&[u8]) -> std::result::Result<Vec<u8>, String> + Send + Sync;

/// A codec built from a pair of closures, for wiring in third-party
/// compressors without a dedicated type.
pub struct ExternalAdapter {
    id: CodecId,
    name: String,
    compress: Box<CodecFn>,
    decompress: Box<CodecFn>,
}

impl ExternalAdapter {
    pub fn new<C, D>(id: u16, name: impl Into<String>, compress: C, decompress: D) -> Self
    where
        C: Fn(&[u8]) -> std::result::Result<Vec<u8>, String> + Send + Sync + 'static,
        D: Fn(&[u8]) -> std::result::Result<Vec<u8>, String> + Send + Sync + 'static,
    {
        ExternalAdapter {
            id: CodecId(id),
            name: name.into(),
            compress: Box::new(compress),
            decompress: Box::new(decompress),
        }
    }
}

impl Codec for ExternalAdapter {
    fn id(&self) -> CodecId {
        self.id
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn compress(&self, _params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
        (self.compress)(input).map_err(Error::External)
    }

    fn decompress(&self, input: &[u8]) -> Result<Vec<u8>> {
        (self.decompress)(input).map_err(|e| Error::corrupt(0, e))
    }
}

#[derive(Clone)]
pub struct CodecRegistry {
    codecs: BTreeMap<u16, Arc<dyn Codec>>,
}

impl fmt::Debug for CodecRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.codecs.iter().map(|(id, c)| (id, c.name())))
            .finish()
    }
}

impl Default for CodecRegistry {
    fn default() -> Self {
        let mut codecs: BTreeMap<u16, Arc<dyn Codec>> = BTreeMap::new();
        codecs.insert(CodecId::STORE.0, Arc::new(store::Store));
        codecs.insert(CodecId::LZ77.0, Arc::new(lz77::Lz77));
        codecs.insert(CodecId::HUFFMAN.0, Arc::new(huffman::Huffman));
        codecs.insert(CodecId::XOR_DELTA.0, Arc::new(xor_delta::XorDelta));
        CodecRegistry { codecs }
    }
}

impl CodecRegistry {
    /// Shared registry holding only the built-in codecs.
    pub fn builtin() -> &'static CodecRegistry {
        static BUILTIN: OnceLock<CodecRegistry> = OnceLock::new();
        BUILTIN.get_or_init(CodecRegistry::default)
    }

    /// Adds an external codec. Ids already taken are rejected with
    /// `DuplicateId`; free ids below 16 are reserved.
    pub fn register_external(&mut self, codec: Arc<dyn Codec>) -> Result<CodecId> {
        let id = codec.id();
        if self.codecs.contains_key(&id.0) {
            return Err(Error::DuplicateId(id.0));
        }
        if id.0 < CodecId::FIRST_EXTERNAL {
            return Err(Error::ReservedId(id.0));
        }
        if self.codecs.values().any(|c| c.name() == codec.name()) {
            return Err(Error::InvalidParams(format!("codec name {:?} already taken", codec.name())));
        }
        self.codecs.insert(id.0, codec);
        Ok(id)
    }

    /// The built-in codecs plus every adapter compiled in (zstd at id 16
    /// with the `zstd` feature).
    pub fn with_adapters() -> CodecRegistry {
        #[allow(unused_mut)]
        let mut r = CodecRegistry::default();
        #[cfg(feature = "zstd")]
        zstd::register(&mut r, zstd::DEFAULT_LEVEL).expect("id 16 is free");
        r
    }

    pub fn get(&self, id: CodecId) -> Result<&Arc<dyn Codec>> {
        self.codecs.get(&id.0).ok_or(Error::UnknownCodec(id.0))
    }

    pub fn by_name(&self, name: &str) -> Result<CodecId> {
        self.codecs
            .values()
            .find(|c| c.name() == name)
            .map(|c| c.id())
            .ok_or_else(|| Error::UnknownCodecName(name.to_string()))
    }

    pub fn name_of(&self, id: CodecId) -> Option<&str> {
        self.codecs.get(&id.0).map(|c| c.name())
    }

    pub fn ids(&self) -> impl Iterator<Item = CodecId> + '_ {
        self.codecs.keys().map(|&id| CodecId(id))
    }

    pub fn compress(&self, id: CodecId, params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
        self.get(id)?.compress(params, input)
    }

    pub fn decompress(&self, id: CodecId, input: &[u8]) -> Result<Vec<u8>> {
        self.get(id)?.decompress(input)
    }
}

/// Compresses with a built-in codec.
pub fn compress(codec: CodecId, params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
    CodecRegistry::builtin().compress(codec, params, input)
}

/// Decompresses a stream produced by a built-in codec.
pub fn decompress(codec: CodecId, input: &[u8]) -> Result<Vec<u8>> {
    CodecRegistry::builtin().decompress(codec, input)
}

/// Checks the leading tag byte that every built-in stream starts with.
pub(crate) fn expect_tag(input: &[u8], id: CodecId) -> Result<()> {
    match input.first() {
        Some(&t) if t as u16 == id.0 => Ok(()),
        Some(&t) => Err(Error::corrupt(0, format!("stream tag {t} is not codec {id}"))),
        None => Err(Error::corrupt(0, "empty stream")),
    }
}
