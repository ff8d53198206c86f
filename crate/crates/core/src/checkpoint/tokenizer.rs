//! Byte-level tokenizer.
//!
//! Token ids: BOS = 0, EOS = 1, byte `b` maps to `b + 2`. Ids 258 and above
//! (possible when a model's vocabulary is padded past full byte coverage)
//! are reserved and decode to nothing, like the specials. Encoding never
//! produces BOS or EOS, so decode(encode(text)) == text for any byte string
//! the vocabulary can represent.

use super::CheckpointError;

pub const BOS_TOKEN: u32 = 0;
pub const EOS_TOKEN: u32 = 1;
/// Number of reserved special ids before the byte range starts.
pub const SPECIAL_TOKENS: u32 = 2;

/// Byte-level tokenizer bounded by a model vocabulary size.
///
/// Full byte coverage needs `vocab_size >= 258`; smaller vocabularies can
/// only encode bytes below `vocab_size - 2` and reject anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    vocab_size: usize,
}

impl Tokenizer {
    pub fn new(vocab_size: usize) -> Result<Self, CheckpointError> {
        if vocab_size < 4 {
            return Err(CheckpointError::Tokenizer(format!(
                "vocab_size {vocab_size} too small (minimum 4)"
            )));
        }
        Ok(Tokenizer { vocab_size })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Encodes a byte string. Never emits BOS/EOS.
    pub fn encode(&self, text: &[u8]) -> Result<Vec<u32>, CheckpointError> {
        let mut out = Vec::with_capacity(text.len());
        for &b in text {
            let id = b as u32 + SPECIAL_TOKENS;
            if id as usize >= self.vocab_size {
                return Err(CheckpointError::Tokenizer(format!(
                    "byte 0x{b:02x} not representable under vocab_size {}",
                    self.vocab_size
                )));
            }
            out.push(id);
        }
        Ok(out)
    }

    /// Decodes token ids back to bytes. Specials and reserved ids above the
    /// byte range decode to nothing; ids at or past `vocab_size` are errors.
    pub fn decode_tokens(&self, tokens: &[u32]) -> Result<Vec<u8>, CheckpointError> {
        let mut out = Vec::with_capacity(tokens.len());
        for &t in tokens {
            if t as usize >= self.vocab_size {
                return Err(CheckpointError::Tokenizer(format!(
                    "token {t} out of range for vocab_size {}",
                    self.vocab_size
                )));
            }
            if let Some(b) = self.token_to_byte(t) {
                out.push(b);
            }
        }
        Ok(out)
    }

    /// The byte a single token stands for, if any.
    pub fn token_to_byte(&self, token: u32) -> Option<u8> {
        if (SPECIAL_TOKENS..SPECIAL_TOKENS + 256).contains(&token) {
            Some((token - SPECIAL_TOKENS) as u8)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hi_maps_to_shifted_bytes() {
        let tok = Tokenizer::new(258).unwrap();
        assert_eq!(tok.encode(b"Hi").unwrap(), vec![74, 107]);
    }

    #[test]
    fn empty_round_trip() {
        let tok = Tokenizer::new(258).unwrap();
        assert_eq!(tok.encode(b"").unwrap(), Vec::<u32>::new());
        assert_eq!(tok.decode_tokens(&[]).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn specials_decode_to_nothing() {
        let tok = Tokenizer::new(258).unwrap();
        assert_eq!(
            tok.decode_tokens(&[BOS_TOKEN, 74, EOS_TOKEN]).unwrap(),
            b"H".to_vec()
        );
    }

    #[test]
    fn out_of_range_token_rejected() {
        let tok = Tokenizer::new(258).unwrap();
        assert!(tok.decode_tokens(&[258]).is_err());
    }

    #[test]
    fn small_vocab_restricts_bytes() {
        let tok = Tokenizer::new(64).unwrap();
        assert!(tok.encode(b"09 .").is_ok()); // all bytes < 62
        assert!(tok.encode(b"Hi").is_err()); // 'H' = 72 -> id 74 >= 64
    }

    #[test]
    fn round_trip_random_bytes() {
        let tok = Tokenizer::new(258).unwrap();
        let mut rng = crate::prng::seeded(99);
        let bytes: Vec<u8> = (0..256)
            .map(|_| (crate::prng::uniform_inclusive(&mut rng, 0, 255)) as u8)
            .collect();
        let tokens = tok.encode(&bytes).unwrap();
        assert!(tokens.iter().all(|&t| t != BOS_TOKEN && t != EOS_TOKEN));
        assert_eq!(tok.decode_tokens(&tokens).unwrap(), bytes);
    }
}
