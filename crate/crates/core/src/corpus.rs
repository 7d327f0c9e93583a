//! Symbol sequences and the tokenizers that build them.
//!
//! A [`Corpus`] stores every sequence in one flat buffer with offsets, so a
//! 60000-image MNIST corpus is a single allocation. Sequences are exposed as
//! slices through [`Corpus::sequences`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a corpus alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(transparent)]
pub struct Symbol(pub u32);

impl Symbol {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenMode {
    Byte,
    Char,
    Word,
    Pixel,
}

impl TokenMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenMode::Byte => "byte",
            TokenMode::Char => "char",
            TokenMode::Word => "word",
            TokenMode::Pixel => "pixel",
        }
    }

    fn alphabet_limit(self) -> Option<usize> {
        match self {
            TokenMode::Byte | TokenMode::Pixel => Some(256),
            TokenMode::Char | TokenMode::Word => None,
        }
    }
}

impl fmt::Display for TokenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The units behind each symbol id, in id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Alphabet {
    Bytes(Vec<u8>),
    Chars(Vec<char>),
    Words(Vec<String>),
    /// Raw pixel intensities; symbol id equals the byte value.
    Pixels,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    symbols: Vec<Symbol>,
    // offsets[i]..offsets[i + 1] is sequence i
    offsets: Vec<usize>,
    alphabet_size: usize,
    alphabet: Option<Alphabet>,
    mode: TokenMode,
    source_meta: String,
}

impl Corpus {
    /// Builds a corpus from explicit sequences, validating every invariant.
    pub fn from_sequences<I, S>(
        sequences: I,
        alphabet_size: usize,
        mode: TokenMode,
        source_meta: impl Into<String>,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u32]>,
    {
        if alphabet_size == 0 {
            return Err(Error::EmptyInput);
        }
        if let Some(limit) = mode.alphabet_limit() {
            if alphabet_size > limit {
                return Err(Error::AlphabetTooLarge {
                    size: alphabet_size,
                    limit,
                });
            }
        }
        let mut symbols = Vec::new();
        let mut offsets = Vec::from([0]);
        for seq in sequences {
            let seq = seq.as_ref();
            if seq.is_empty() {
                return Err(Error::EmptyInput);
            }
            for &s in seq {
                if s as usize >= alphabet_size {
                    return Err(Error::SymbolOutOfRange {
                        symbol: s,
                        alphabet_size,
                    });
                }
                symbols.push(Symbol(s));
            }
            offsets.push(symbols.len());
        }
        if offsets.len() == 1 {
            return Err(Error::EmptyInput);
        }
        Ok(Corpus {
            symbols,
            offsets,
            alphabet_size,
            alphabet: if mode == TokenMode::Pixel {
                Some(Alphabet::Pixels)
            } else {
                None
            },
            mode,
            source_meta: source_meta.into(),
        })
    }

    /// One sequence of bytes; ids are assigned in first-occurrence order.
    pub fn from_bytes(bytes: &[u8], source_meta: impl Into<String>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut ids = [u32::MAX; 256];
        let mut units = Vec::new();
        let mut symbols = Vec::with_capacity(bytes.len());
        for &b in bytes {
            let slot = &mut ids[b as usize];
            if *slot == u32::MAX {
                *slot = units.len() as u32;
                units.push(b);
            }
            symbols.push(Symbol(*slot));
        }
        Ok(Self::single(
            symbols,
            units.len(),
            Alphabet::Bytes(units),
            TokenMode::Byte,
            source_meta.into(),
        ))
    }

    /// One sequence of Unicode scalar values.
    pub fn from_utf8_chars(bytes: &[u8], source_meta: impl Into<String>) -> Result<Self> {
        let text = core::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
            offset: e.valid_up_to(),
        })?;
        let (symbols, units) = first_occurrence_ids(text.chars());
        if symbols.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self::single(
            symbols,
            units.len(),
            Alphabet::Chars(units),
            TokenMode::Char,
            source_meta.into(),
        ))
    }

    /// One sequence of words split on ASCII whitespace, case preserved.
    pub fn from_utf8_words(bytes: &[u8], source_meta: impl Into<String>) -> Result<Self> {
        let text = core::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
            offset: e.valid_up_to(),
        })?;
        let (symbols, units) = first_occurrence_ids(text.split_ascii_whitespace());
        if symbols.is_empty() {
            return Err(Error::EmptyInput);
        }
        let units: Vec<String> = units.into_iter().map(ToString::to_string).collect();
        Ok(Self::single(
            symbols,
            units.len(),
            Alphabet::Words(units),
            TokenMode::Word,
            source_meta.into(),
        ))
    }

    /// Tokenizes `bytes` according to `mode`. Pixel mode is not a text mode.
    pub fn from_text(
        bytes: &[u8],
        mode: TokenMode,
        source_meta: impl Into<String>,
    ) -> Result<Self> {
        match mode {
            TokenMode::Byte => Self::from_bytes(bytes, source_meta),
            TokenMode::Char => Self::from_utf8_chars(bytes, source_meta),
            TokenMode::Word => Self::from_utf8_words(bytes, source_meta),
            TokenMode::Pixel => Err(Error::InvalidConfig("pixel mode requires image input")),
        }
    }

    /// One sequence per image, each the row-major flattening of raw pixel bytes.
    pub fn from_images(
        pixels: &[u8],
        image_len: usize,
        source_meta: impl Into<String>,
    ) -> Result<Self> {
        if image_len == 0 || pixels.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !pixels.len().is_multiple_of(image_len) {
            return Err(Error::LengthMismatch {
                index: pixels.len() / image_len,
                expected: image_len,
                found: pixels.len() % image_len,
            });
        }
        let symbols = pixels.iter().map(|&p| Symbol(p as u32)).collect::<Vec<_>>();
        let offsets = (0..=pixels.len() / image_len)
            .map(|i| i * image_len)
            .collect();
        Ok(Corpus {
            symbols,
            offsets,
            alphabet_size: 256,
            alphabet: Some(Alphabet::Pixels),
            mode: TokenMode::Pixel,
            source_meta: source_meta.into(),
        })
    }

    fn single(
        symbols: Vec<Symbol>,
        alphabet_size: usize,
        alphabet: Alphabet,
        mode: TokenMode,
        source_meta: String,
    ) -> Self {
        let len = symbols.len();
        Corpus {
            symbols,
            offsets: Vec::from([0, len]),
            alphabet_size,
            alphabet: Some(alphabet),
            mode,
            source_meta,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn alphabet(&self) -> Option<&Alphabet> {
        self.alphabet.as_ref()
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    pub fn source_meta(&self) -> &str {
        &self.source_meta
    }

    pub fn num_sequences(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn max_sequence_len(&self) -> usize {
        self.sequence_lens().max().unwrap_or(0)
    }

    pub fn sequence(&self, index: usize) -> &[Symbol] {
        &self.symbols[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn sequences(&self) -> impl ExactSizeIterator<Item = &[Symbol]> + '_ {
        self.offsets
            .windows(2)
            .map(move |w| &self.symbols[w[0]..w[1]])
    }

    pub fn sequence_lens(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    /// Reverses the byte-mode encoding. `None` for other modes.
    pub fn decode_bytes(&self) -> Option<Vec<u8>> {
        match &self.alphabet {
            Some(Alphabet::Bytes(units)) => {
                Some(self.symbols.iter().map(|s| units[s.index()]).collect())
            }
            _ => None,
        }
    }

    /// Raw pixel bytes, image after image. `None` unless mode is pixel.
    pub fn pixel_bytes(&self) -> Option<Vec<u8>> {
        (self.mode == TokenMode::Pixel).then(|| self.symbols.iter().map(|s| s.0 as u8).collect())
    }

    /// Applies the seeded position permutation to every sequence.
    pub fn permute(&self, spec: &PermutationSpec) -> Result<Corpus> {
        let mut out = self.apply_permutation(&spec.indices())?;
        out.source_meta = format!(
            "{}; permuted seed={} length={}",
            self.source_meta, spec.seed, spec.length
        );
        Ok(out)
    }

    /// Gathers positions: output sequence `[i]` = input sequence `[perm[i]]`.
    pub fn apply_permutation(&self, perm: &[usize]) -> Result<Corpus> {
        for (index, len) in self.sequence_lens().enumerate() {
            if len != perm.len() {
                return Err(Error::LengthMismatch {
                    index,
                    expected: perm.len(),
                    found: len,
                });
            }
        }
        let mut symbols = Vec::with_capacity(self.symbols.len());
        for seq in self.sequences() {
            symbols.extend(perm.iter().map(|&p| seq[p]));
        }
        Ok(Corpus {
            symbols,
            offsets: self.offsets.clone(),
            alphabet_size: self.alphabet_size,
            alphabet: self.alphabet.clone(),
            mode: self.mode,
            source_meta: self.source_meta.clone(),
        })
    }
}

fn first_occurrence_ids<T: Ord + Clone>(units: impl Iterator<Item = T>) -> (Vec<Symbol>, Vec<T>) {
    let mut ids = BTreeMap::new();
    let mut order = Vec::new();
    let mut symbols = Vec::new();
    for unit in units {
        let next = order.len() as u32;
        let id = *ids.entry(unit.clone()).or_insert_with(|| {
            order.push(unit);
            next
        });
        symbols.push(Symbol(id));
    }
    (symbols, order)
}

/// A fixed position permutation derived from a seed.
///
/// The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`; the
/// shuffle is Fisher–Yates from the last position down, drawing
/// `j` uniformly from `0..=i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationSpec {
    pub seed: u64,
    pub length: usize,
}

impl PermutationSpec {
    pub fn new(seed: u64, length: usize) -> Self {
        PermutationSpec { seed, length }
    }

    pub fn indices(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.length).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for i in (1..self.length).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        perm
    }
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = alloc::vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}
