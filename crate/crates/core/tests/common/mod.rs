//! Reference evaluators written directly from integer arithmetic, kept
//! apart from the library's oracles.

#![allow(dead_code)]

/// Input `x` as bits, `D0` first, where `D0` is the most significant bit.
pub fn bits(x: u64, width: usize) -> Vec<bool> {
    (0..width).map(|i| (x >> (width - 1 - i)) & 1 == 1).collect()
}

fn value(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| acc * 2 + b as u64)
}

pub fn multiplexer(bits: &[bool]) -> bool {
    let k = (1..).find(|k| k + (1usize << k) == bits.len()).unwrap();
    bits[k + value(&bits[..k]) as usize]
}

pub fn even_parity(bits: &[bool]) -> bool {
    bits.iter().filter(|b| **b).count() % 2 == 0
}

pub fn carry_one(bits: &[bool]) -> bool {
    let half = bits.len() / 2;
    value(&bits[..half]) + value(&bits[half..]) >= 1 << half
}

pub fn majority_on(bits: &[bool]) -> bool {
    bits.iter().filter(|b| **b).count() * 2 > bits.len()
}

/// Applies `top` to the even parities of consecutive 3-bit blocks.
pub fn hierarchical(top: fn(&[bool]) -> bool, bits: &[bool]) -> bool {
    let meta: Vec<bool> = bits.chunks(3).map(even_parity).collect();
    top(&meta)
}
