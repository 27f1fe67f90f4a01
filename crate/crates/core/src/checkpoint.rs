//! Binary checkpoints of kernel operators.
//!
//! Layout (all little-endian): the magic `BDFQ`, a `u32` version, the cutoff
//! `Λ` as `f64`, `n_per_axis` and the block count as `u64`, then every kernel
//! block `Q̂(p,q)` in lattice order, row-major, as interleaved `f64` real and
//! imaginary parts.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{BdfError, Result};
use crate::opspace::KernelOperator;
use crate::space::MomentumSpace;
use crate::spinor::SpinorMatrix;

const MAGIC: &[u8; 4] = b"BDFQ";
const VERSION: u32 = 1;

pub fn write_checkpoint(q: &KernelOperator, mut out: impl Write) -> Result<()> {
    let space = q.space();
    let lat = space.lattice();
    let n = space.len();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&lat.cutoff().to_le_bytes())?;
    out.write_all(&(lat.n_per_axis() as u64).to_le_bytes())?;
    out.write_all(&((n * n) as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(n * 16 * 16);
    for p in 0..n {
        buf.clear();
        for r in 0..n {
            let k = q.kernel(p, r);
            for row in k.0 {
                for z in row {
                    buf.extend_from_slice(&z.re.to_le_bytes());
                    buf.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_array<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input
        .read_exact(&mut b)
        .map_err(|e| BdfError::Checkpoint(format!("truncated: {e}")))?;
    Ok(b)
}

/// Reads a checkpoint, rebuilding its lattice.
pub fn read_checkpoint(mut input: impl Read) -> Result<KernelOperator> {
    if &read_array::<4>(&mut input)? != MAGIC {
        return Err(BdfError::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != VERSION {
        return Err(BdfError::Checkpoint(format!("unsupported version {version}")));
    }
    let cutoff = f64::from_le_bytes(read_array(&mut input)?);
    let n_per_axis = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let blocks = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let space = MomentumSpace::new(cutoff, n_per_axis)?;
    read_blocks(&space, blocks, &mut input)
}

fn read_blocks(space: &Arc<MomentumSpace>, blocks: usize, input: &mut impl Read) -> Result<KernelOperator> {
    let n = space.len();
    if blocks != n * n {
        return Err(BdfError::Checkpoint(format!("expected {} blocks, header says {blocks}", n * n)));
    }
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() != blocks * 16 * 16 {
        return Err(BdfError::Checkpoint(format!(
            "expected {} bytes of block data, found {}",
            blocks * 256,
            data.len()
        )));
    }
    let value = |i: usize| f64::from_le_bytes(data[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let op = KernelOperator::from_kernel(space, |p, r| {
        let base = (p * n + r) * 32;
        SpinorMatrix::from_fn(|a, b| {
            let i = base + 2 * (4 * a + b);
            C64::new(value(i), value(i + 1))
        })
    });
    if op.matrix().has_nan() || !op.hs_norm().is_finite() {
        return Err(BdfError::NonFinite("checkpoint data".into()));
    }
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opspace::random_hs_sample;

    #[test]
    fn round_trip() {
        let space = MomentumSpace::new(2.0, 3).unwrap();
        let q = random_hs_sample(&space, 1.3, 17);
        let mut bytes = Vec::new();
        write_checkpoint(&q, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"BDFQ");
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 8 + space.len().pow(2) * 256);
        let back = read_checkpoint(bytes.as_slice()).unwrap();
        assert_eq!(back.space().len(), space.len());
        assert!(back.sub(&q).unwrap().hs_norm() <= 1e-15 * q.hs_norm());
    }

    #[test]
    fn rejects_corrupt_input() {
        let space = MomentumSpace::new(2.0, 3).unwrap();
        let q = random_hs_sample(&space, 1.0, 1);
        let mut bytes = Vec::new();
        write_checkpoint(&q, &mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(bad.as_slice()), Err(BdfError::Checkpoint(_))));
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(read_checkpoint(bytes.as_slice()), Err(BdfError::Checkpoint(_))));
    }
}
