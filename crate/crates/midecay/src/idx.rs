//! IDX image files (magic `0x00000803`): unsigned bytes, three big-endian
//! `u32` dimensions (count, rows, columns), then the pixels row-major.

use crate::error::IdxError;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: u32,
    pub rows: u32,
    pub cols: u32,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image_len(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, IdxError> {
        if bytes.len() < HEADER_LEN {
            return Err(IdxError::TruncatedHeader { len: bytes.len() });
        }
        let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
        let magic = word(0);
        if magic != IMAGE_MAGIC {
            return Err(IdxError::BadMagic { found: magic });
        }
        let (count, rows, cols) = (word(1), word(2), word(3));
        let expected = (count as u64) * (rows as u64) * (cols as u64);
        let found = (bytes.len() - HEADER_LEN) as u64;
        if found != expected {
            return Err(IdxError::PayloadMismatch { expected, found });
        }
        Ok(IdxImages {
            count,
            rows,
            cols,
            pixels: bytes[HEADER_LEN..].to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.pixels.len());
        for w in [IMAGE_MAGIC, self.count, self.rows, self.cols] {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.extend_from_slice(&self.pixels);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: u32, n: u32, r: u32, c: u32) -> Vec<u8> {
        [magic, n, r, c]
            .iter()
            .flat_map(|w| w.to_be_bytes())
            .collect()
    }

    #[test]
    fn minimal_file() {
        let mut bytes = header(IMAGE_MAGIC, 1, 1, 1);
        bytes.push(0);
        let img = IdxImages::parse(&bytes).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (1, 1, 1));
        assert_eq!(img.pixels, vec![0]);
        assert_eq!(img.to_bytes(), bytes);
    }

    #[test]
    fn header_is_big_endian() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 3];
        bytes.extend([1, 2, 3, 4, 5, 6]);
        let img = IdxImages::parse(&bytes).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (2, 1, 3));
    }

    #[test]
    fn rejects_label_magic() {
        let mut bytes = header(0x0000_0801, 1, 1, 1);
        bytes.push(0);
        assert_eq!(
            IdxImages::parse(&bytes),
            Err(IdxError::BadMagic { found: 0x0801 })
        );
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = header(IMAGE_MAGIC, 2, 28, 28);
        bytes.extend(vec![0u8; 784 + 10]);
        assert_eq!(
            IdxImages::parse(&bytes),
            Err(IdxError::PayloadMismatch {
                expected: 1568,
                found: 794
            })
        );
        assert_eq!(
            IdxImages::parse(&bytes[..9]),
            Err(IdxError::TruncatedHeader { len: 9 })
        );
    }
}
