//! Run-length coding of patch masks for the optional `MSK` side channel.
//!
//! Byte 0 is the value of the first run (0 or 1). The run lengths follow as unsigned
//! LEB128 varints over the row-major bits, with values alternating between runs. An empty
//! grid encodes as the single byte `0`.

use super::PatchMask;
use crate::error::{Error, Result};

pub fn mask_to_rle(mask: &PatchMask) -> Vec<u8> {
    let bits = mask.bits();
    let mut out = vec![bits.first().copied().unwrap_or(false) as u8];
    let mut iter = bits.iter().peekable();
    while let Some(&b) = iter.next() {
        let mut run: u64 = 1;
        while iter.peek() == Some(&&b) {
            iter.next();
            run += 1;
        }
        write_varint(&mut out, run);
    }
    out
}

pub fn rle_to_mask(bytes: &[u8], n_h: u32, n_w: u32) -> Result<PatchMask> {
    let total = n_h as u64 * n_w as u64;
    let (&first, mut rest) = bytes
        .split_first()
        .ok_or_else(|| Error::Rle("empty stream".into()))?;
    if first > 1 {
        return Err(Error::Rle(format!("first-run value byte is {first}")));
    }
    let mut value = first == 1;
    let mut bits = Vec::with_capacity(total as usize);
    while !rest.is_empty() {
        let (run, used) = read_varint(rest)?;
        rest = &rest[used..];
        if run == 0 {
            return Err(Error::Rle("zero-length run".into()));
        }
        if bits.len() as u64 + run > total {
            return Err(Error::Rle(format!(
                "runs exceed the {n_h}x{n_w} grid ({} > {total})",
                bits.len() as u64 + run
            )));
        }
        bits.extend(std::iter::repeat_n(value, run as usize));
        value = !value;
    }
    if bits.len() as u64 != total {
        return Err(Error::Rle(format!(
            "runs cover {} of {total} patches",
            bits.len()
        )));
    }
    PatchMask::from_bits(n_h, n_w, bits, None)
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn read_varint(bytes: &[u8]) -> Result<(u64, usize)> {
    let mut v: u64 = 0;
    for (i, &b) in bytes.iter().enumerate().take(10) {
        v |= ((b & 0x7f) as u64) << (7 * i);
        if b & 0x80 == 0 {
            return Ok((v, i + 1));
        }
    }
    Err(Error::Rle("truncated or oversized run length".into()))
}
