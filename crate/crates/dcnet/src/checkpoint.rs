//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   b"DCNC"
//! version u32 (currently 1)
//! config  u64 length + ModelConfig JSON
//! vocab   u64 count, then per token: u32 length + UTF-8 bytes
//!         (reserved PAD/UNK entries are implicit)
//! params  u64 count, then per parameter:
//!         u32 name length + name, u8 group (0 embedding, 1 other),
//!         u8 rank, rank x u64 dims, numel x f32 values
//! crc32   u32 over everything above
//! ```
//!
//! Parameters are stored as 32-bit floats; training in single-precision
//! mode keeps values on the f32 grid, so save/load round-trips exactly.
//! Files are written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{DCNetModel, ModelConfig};
use crate::numerics::{ParamGroup, ParameterStore};

const MAGIC: &[u8; 4] = b"DCNC";
const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

/// Serialize the model into checkpoint bytes.
pub fn checkpoint_bytes(
    config: &ModelConfig,
    vocab: &Vocabulary,
    store: &ParameterStore,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION);

    let config_json = serde_json::to_string(config)
        .map_err(|e| Error::Checkpoint(format!("cannot serialize config: {e}")))?;
    put_u64(&mut buf, config_json.len() as u64);
    buf.extend_from_slice(config_json.as_bytes());

    let stored = vocab.stored_tokens();
    put_u64(&mut buf, stored.len() as u64);
    for token in stored {
        put_str(&mut buf, token);
    }

    put_u64(&mut buf, store.len() as u64);
    for (name, group, tensor) in store.iter() {
        put_str(&mut buf, name);
        buf.push(match group {
            ParamGroup::Embedding => 0,
            ParamGroup::Other => 1,
        });
        buf.push(tensor.shape().len() as u8);
        for &dim in tensor.shape() {
            put_u64(&mut buf, dim as u64);
        }
        for &v in tensor.values() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }

    let crc = crc32fast::hash(&buf);
    put_u32(&mut buf, crc);
    Ok(buf)
}

/// Write a checkpoint atomically (temp file + rename).
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    config: &ModelConfig,
    vocab: &Vocabulary,
    store: &ParameterStore,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = checkpoint_bytes(config, vocab, store)?;
    let tmp = path.with_extension("ckpt.tmp");
    {
        let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("file truncated".into()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Checkpoint("non-UTF-8 string".into()))
    }
}

/// Load a checkpoint and rebuild the model it describes.
pub fn load_checkpoint(
    path: impl AsRef<Path>,
) -> Result<(ModelConfig, Vocabulary, DCNetModel, ParameterStore)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_checkpoint_bytes(&bytes)
}

/// As [`load_checkpoint`], from an in-memory buffer.
pub fn load_checkpoint_bytes(
    bytes: &[u8],
) -> Result<(ModelConfig, Vocabulary, DCNetModel, ParameterStore)> {
    if bytes.len() < 8 {
        return Err(Error::Checkpoint("file truncated".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }

    let mut reader = Reader {
        bytes: body,
        pos: 0,
    };
    if reader.take(4)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = reader.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "version mismatch: file has {version}, this build reads {VERSION}"
        )));
    }

    let config_len = reader.u64()? as usize;
    let config_json = reader.take(config_len)?;
    let config: ModelConfig = serde_json::from_slice(config_json)
        .map_err(|e| Error::Checkpoint(format!("bad config block: {e}")))?;

    let vocab_count = reader.u64()? as usize;
    let mut tokens = Vec::with_capacity(vocab_count);
    for _ in 0..vocab_count {
        tokens.push(reader.str()?);
    }
    let vocab = Vocabulary::from_stored_tokens(tokens);
    if vocab.len() != config.vocab_size {
        return Err(Error::Checkpoint(format!(
            "vocabulary has {} entries but config declares {}",
            vocab.len(),
            config.vocab_size
        )));
    }

    let (model, mut store) = DCNetModel::init(config.clone(), None, 0)?;

    let param_count = reader.u64()? as usize;
    if param_count != store.len() {
        return Err(Error::Checkpoint(format!(
            "file has {param_count} parameters, model defines {}",
            store.len()
        )));
    }
    for _ in 0..param_count {
        let name = reader.str()?;
        let group_byte = reader.take(1)?[0];
        let rank = reader.take(1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(reader.u64()? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = reader.take(numel * 4)?;

        let id = store
            .id(&name)
            .ok_or_else(|| Error::Checkpoint(format!("unknown parameter `{name}`")))?;
        let expected_group = match store.group(id) {
            ParamGroup::Embedding => 0u8,
            ParamGroup::Other => 1u8,
        };
        if group_byte != expected_group {
            return Err(Error::Checkpoint(format!(
                "parameter `{name}` has the wrong group"
            )));
        }
        let tensor = store.get_mut(id);
        if tensor.shape() != shape.as_slice() {
            return Err(Error::Shape(format!(
                "parameter `{name}`: file has {:?}, model expects {:?}",
                shape,
                tensor.shape()
            )));
        }
        for (i, chunk) in raw.chunks_exact(4).enumerate() {
            tensor.values_mut()[i] = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        }
    }

    if reader.pos != body.len() {
        return Err(Error::Checkpoint(
            "trailing bytes after parameter blocks".into(),
        ));
    }
    Ok((config, vocab, model, store))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{EmbeddingMatrix, Vocabulary};
    use crate::encoder::Pooling;
    use crate::model::{AnalyzerMode, ChannelIndices};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build() -> (ModelConfig, Vocabulary, DCNetModel, ParameterStore) {
        let vocab = Vocabulary::build(["what a day", "the exam is here"]);
        let emb = EmbeddingMatrix::random(&vocab, 5, 3);
        let config = ModelConfig {
            vocab_size: vocab.len(),
            input_dim: 5,
            hidden_dim: 3,
            proj_dim: 6,
            analyzer: AnalyzerMode::Concat,
            pooling: Pooling::FinalState,
            dropout_embedding: 0.0,
        };
        let (model, mut store) = DCNetModel::init(config.clone(), Some(&emb.tensor), 7).unwrap();
        // emulate single-precision training so round-trip is exact
        store.quantize_f32();
        (config, vocab, model, store)
    }

    #[test]
    fn roundtrip_preserves_parameters_and_outputs() {
        let (config, vocab, model, store) = build();
        let bytes = checkpoint_bytes(&config, &vocab, &store).unwrap();
        let (config2, vocab2, model2, store2) = load_checkpoint_bytes(&bytes).unwrap();

        assert_eq!(config, config2);
        assert_eq!(vocab, vocab2);
        for (name, _, tensor) in store.iter() {
            let other = store2.get(store2.id(name).unwrap());
            assert_eq!(
                tensor.values(),
                other.values(),
                "`{name}` changed in round-trip"
            );
        }

        let ex = ChannelIndices {
            w_t: &[2, 3, 4],
            w_l: &[3],
            w_d: &[2, 4],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out1, _) = model.forward(&store, ex, false, &mut rng).unwrap();
        let (out2, _) = model2.forward(&store2, ex, false, &mut rng).unwrap();
        assert_eq!(out1.p_s, out2.p_s);
        assert_eq!(out1.v_l_prime, out2.v_l_prime);
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let (config, vocab, _, store) = build();
        let mut bytes = checkpoint_bytes(&config, &vocab, &store).unwrap();
        let middle = bytes.len() / 2;
        bytes[middle] ^= 0xff;
        match load_checkpoint_bytes(&bytes) {
            Err(Error::Checkpoint(msg)) => assert!(msg.contains("checksum")),
            other => panic!("expected checksum error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let (config, vocab, _, store) = build();
        let mut bytes = checkpoint_bytes(&config, &vocab, &store).unwrap();
        bytes[4] = 99; // version field
        let crc = crc32fast::hash(&bytes[..bytes.len() - 4]);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        match load_checkpoint_bytes(&bytes) {
            Err(Error::Checkpoint(msg)) => assert!(msg.contains("version")),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn config_parameter_shape_disagreement_is_reported() {
        // A tampered config (different hidden width) no longer matches the
        // stored parameter blocks.
        let (config, vocab, _, store) = build();
        let bytes = checkpoint_bytes(&config, &vocab, &store).unwrap();

        let mut tampered = config.clone();
        tampered.hidden_dim = 4;
        let mut out = Vec::new();
        out.extend_from_slice(&bytes[..8]);
        let config_json = serde_json::to_string(&tampered).unwrap();
        out.extend_from_slice(&(config_json.len() as u64).to_le_bytes());
        out.extend_from_slice(config_json.as_bytes());
        let old_config_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        out.extend_from_slice(&bytes[16 + old_config_len..bytes.len() - 4]);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());

        match load_checkpoint_bytes(&out) {
            Err(Error::Shape(msg)) => assert!(msg.contains("file has")),
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn save_and_load_via_file() {
        let (config, vocab, _, store) = build();
        let path = std::env::temp_dir().join(format!("dcnet-ckpt-{}.ckpt", std::process::id()));
        save_checkpoint(&path, &config, &vocab, &store).unwrap();
        let (_, _, _, store2) = load_checkpoint(&path).unwrap();
        for (name, _, tensor) in store.iter() {
            assert_eq!(
                tensor.values(),
                store2.get(store2.id(name).unwrap()).values()
            );
        }
        fs::remove_file(path).ok();
    }
}
