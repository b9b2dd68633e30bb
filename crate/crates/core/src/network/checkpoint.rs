//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "GLSTMCKP"
//! 8       4     format version (u32 LE), currently 1
//! 12      4     input width (u32 LE), always 26
//! 16      4     n_ff (u32 LE)
//! 20      4     n_lstm (u32 LE)
//! 24      4     output width (u32 LE), always 4
//! 28      ...   tensors in `TensorId::ALL` order, row-major, f64 LE
//! ```

use std::fs;
use std::path::Path;

use super::{ModelParams, TensorId, OUTPUTS};
use crate::corpus::ALPHABET_SIZE;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GLSTMCKP";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 28;

pub fn params_to_bytes(params: &ModelParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * params.parameter_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    for v in [
        CHECKPOINT_VERSION,
        ALPHABET_SIZE as u32,
        params.n_ff() as u32,
        params.n_lstm() as u32,
        OUTPUTS as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for id in TensorId::ALL {
        for v in params.tensor(id) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checkpoint(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("missing GLSTMCKP magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    let (version, inputs, n_ff, n_lstm, outputs) = (word(0), word(1), word(2), word(3), word(4));
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    if inputs as usize != ALPHABET_SIZE || outputs as usize != OUTPUTS {
        return Err(Error::Checkpoint(format!("unexpected io widths {inputs}/{outputs}")));
    }
    if n_ff == 0 || n_lstm == 0 {
        return Err(Error::Checkpoint("layer sizes must be >= 1".into()));
    }
    let mut params = ModelParams::zeros(n_ff as usize, n_lstm as usize);
    let expected = HEADER_LEN + 8 * params.parameter_count();
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} bytes for n_ff={n_ff}, n_lstm={n_lstm}, found {}",
            bytes.len()
        )));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for id in TensorId::ALL {
        for v in params.tensor_mut(id) {
            *v = values.next().expect("length checked");
        }
    }
    Ok(params)
}

pub fn save_params(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, params_to_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    params_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let p = init_params(3, 2, 0);
        let bytes = params_to_bytes(&p);
        assert_eq!(&bytes[..8], b"GLSTMCKP");
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 28 + 8 * p.parameter_count());
        // first tensor value is W_ff[0][0]
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), p.w_ff.get(0, 0));
    }

    #[test]
    fn rejects_corrupt_files() {
        let bytes = params_to_bytes(&init_params(3, 2, 0));
        assert!(params_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(params_from_bytes(&bad).is_err());
        let mut bad = bytes;
        bad[8] = 9;
        assert!(params_from_bytes(&bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), n_ff in 1usize..6, n_lstm in 1usize..6) {
            let p = init_params(n_ff, n_lstm, seed);
            let q = params_from_bytes(&params_to_bytes(&p)).unwrap();
            for id in TensorId::ALL {
                prop_assert!(p.tensor_bits_eq(&q, id));
            }
        }
    }
}
