use super::{expect_tag, Codec, CodecId, CodecParams};
use crate::error::Result;

/// Verbatim copy behind a one-byte tag.
pub struct Store;

impl Codec for Store {
    fn id(&self) -> CodecId {
        CodecId::STORE
    }

    fn name(&self) -> &str {
        "store"
    }

    fn compress(&self, _params: &CodecParams, input: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(input.len() + 1);
        out.push(CodecId::STORE.0 as u8);
        out.extend_from_slice(input);
        Ok(out)
    }

    fn decompress(&self, input: &[u8]) -> Result<Vec<u8>> {
        expect_tag(input, CodecId::STORE)?;
        Ok(input[1..].to_vec())
    }
}
