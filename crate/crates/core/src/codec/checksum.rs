// SPDX-License-Identifier: Apache-2.0
//! 16-bit ones-complement internet checksum.

/// Ones-complement of the ones-complement sum of big-endian 16-bit words.
/// An odd trailing byte is padded with zero. The checksum field must be
/// zeroed in `bytes` when computing a value to store.
pub fn compute_checksum(bytes: &[u8]) -> u16 {
    let mut sum: u16 = 0;
    let mut chunks = bytes.chunks_exact(2);
    for w in &mut chunks {
        sum = ones_add(sum, u16::from_be_bytes([w[0], w[1]]));
    }
    if let [last] = chunks.remainder() {
        sum = ones_add(sum, u16::from_be_bytes([*last, 0]));
    }
    !sum
}

/// True when `bytes`, including their stored checksum, sum to ones-complement zero.
pub fn verify_checksum(bytes: &[u8]) -> bool {
    compute_checksum(bytes) == 0
}

#[inline]
fn ones_add(a: u16, b: u16) -> u16 {
    let (s, carry) = a.overflowing_add(b);
    s + u16::from(carry)
}
