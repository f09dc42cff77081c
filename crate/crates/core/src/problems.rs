//! Boolean benchmark environments.
//!
//! Bit conventions: `bits[0]` is `D0`. Multiplexer addresses and Carry-one
//! operands are read most-significant bit first. Even-parity returns 1 when
//! the number of ones is even; Majority-on needs a strict majority.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub const ENUMERATION_LIMIT: usize = 24;
const BLOCK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Multiplexer,
    EvenParity,
    CarryOne,
    MajorityOn,
}

impl Family {
    fn short_name(self) -> &'static str {
        match self {
            Family::Multiplexer => "mux",
            Family::EvenParity => "eparity",
            Family::CarryOne => "carry",
            Family::MajorityOn => "majority",
        }
    }

    fn from_name(name: &str) -> Option<Family> {
        match name {
            "mux" | "multiplexer" => Some(Family::Multiplexer),
            "eparity" | "parity" | "even_parity" => Some(Family::EvenParity),
            "carry" | "carry_one" => Some(Family::CarryOne),
            "maj" | "majority" | "majority_on" => Some(Family::MajorityOn),
            _ => None,
        }
    }

    pub fn validate_arity(self, arity: usize) -> Result<()> {
        let ok = match self {
            Family::Multiplexer => mux_address_bits(arity).is_some(),
            Family::CarryOne => arity >= 2 && arity % 2 == 0,
            Family::EvenParity | Family::MajorityOn => arity >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!(
                "{arity} is not a valid arity for {}",
                self.short_name()
            )))
        }
    }

    pub fn oracle(self, bits: &[bool]) -> Result<bool> {
        match self {
            Family::Multiplexer => oracle_multiplexer(bits),
            Family::EvenParity => Ok(oracle_even_parity(bits)),
            Family::CarryOne => oracle_carry_one(bits),
            Family::MajorityOn => Ok(oracle_majority_on(bits)),
        }
    }
}

/// Number of address bits `k` such that `arity = k + 2^k`.
pub fn mux_address_bits(arity: usize) -> Option<usize> {
    (1..usize::BITS as usize - 1)
        .take_while(|k| k + (1usize << k) <= arity)
        .find(|k| k + (1usize << k) == arity)
}

pub fn oracle_multiplexer(bits: &[bool]) -> Result<bool> {
    let k = mux_address_bits(bits.len()).ok_or_else(|| {
        Error::InvalidProblem(format!("{} is not a valid multiplexer arity", bits.len()))
    })?;
    let address = bits[..k]
        .iter()
        .fold(0usize, |acc, &b| (acc << 1) | b as usize);
    Ok(bits[k + address])
}

pub fn oracle_even_parity(bits: &[bool]) -> bool {
    bits.iter().filter(|&&b| b).count() % 2 == 0
}

pub fn oracle_carry_one(bits: &[bool]) -> Result<bool> {
    if bits.len() < 2 || bits.len() % 2 != 0 {
        return Err(Error::InvalidProblem(format!(
            "carry-one needs an even arity, got {}",
            bits.len()
        )));
    }
    let half = bits.len() / 2;
    // Ripple from the least significant position; a carry out of the top
    // position is the answer. Works for any operand width.
    let mut carry = false;
    for j in (0..half).rev() {
        let (a, b) = (bits[j], bits[half + j]);
        carry = (a && b) || (carry && (a ^ b));
    }
    Ok(carry)
}

pub fn oracle_majority_on(bits: &[bool]) -> bool {
    2 * bits.iter().filter(|&&b| b).count() > bits.len()
}

/// Meta-bits of a hierarchical problem: even parity of each 3-bit block.
pub fn parity_blocks(bits: &[bool]) -> Vec<bool> {
    bits.chunks(BLOCK).map(oracle_even_parity).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemSpec {
    family: Family,
    arity: usize,
    hierarchical: bool,
}

impl ProblemSpec {
    pub fn flat(family: Family, arity: usize) -> Result<Self> {
        family.validate_arity(arity)?;
        Ok(ProblemSpec {
            family,
            arity,
            hierarchical: false,
        })
    }

    /// Hierarchical problem whose top level has `top_arity` inputs, each
    /// fed by a 3-bit even-parity block.
    pub fn hierarchical(top: Family, top_arity: usize) -> Result<Self> {
        top.validate_arity(top_arity)?;
        Ok(ProblemSpec {
            family: top,
            arity: BLOCK * top_arity,
            hierarchical: true,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_hierarchical(&self) -> bool {
        self.hierarchical
    }

    pub fn label(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.arity {
            return Err(Error::InvalidProblem(format!(
                "{self} expects {} bits, got {}",
                self.arity,
                bits.len()
            )));
        }
        if self.hierarchical {
            self.family.oracle(&parity_blocks(bits))
        } else {
            self.family.oracle(bits)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let bits: Vec<bool> = (0..self.arity).map(|_| rng.gen()).collect();
        let label = self.label(&bits).expect("spec validated at construction");
        Instance { bits, label }
    }

    pub fn enumerate_all(&self) -> Result<Vec<Instance>> {
        if self.arity > ENUMERATION_LIMIT {
            return Err(Error::Capacity(self.arity));
        }
        (0u64..1 << self.arity)
            .map(|x| {
                let bits = bits_msb_first(x, self.arity);
                let label = self.label(&bits)?;
                Ok(Instance { bits, label })
            })
            .collect()
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = if self.hierarchical { "h" } else { "" };
        write!(f, "{prefix}{}:{}", self.family.short_name(), self.arity)
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    /// `family:arity`, e.g. `mux:6`, `eparity:11`, `carry:10`, `hmux:9`.
    /// For hierarchical problems the arity is the total input width.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arity) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::InvalidProblem(format!("expected family:arity, got '{s}'")))?;
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| Error::InvalidProblem(format!("bad arity in '{s}'")))?;
        let name = name.trim().to_ascii_lowercase();
        if let Some(family) = Family::from_name(&name) {
            return ProblemSpec::flat(family, arity);
        }
        let top = name
            .strip_prefix('h')
            .and_then(Family::from_name)
            .ok_or_else(|| Error::InvalidProblem(format!("unknown problem family '{name}'")))?;
        if arity % BLOCK != 0 {
            return Err(Error::InvalidProblem(format!(
                "hierarchical arity {arity} is not a multiple of {BLOCK}"
            )));
        }
        ProblemSpec::hierarchical(top, arity / BLOCK)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub bits: Vec<bool>,
    pub label: bool,
}

/// `x` as `width` bits with bit `width-1` of `x` landing in position 0.
pub fn bits_msb_first(x: u64, width: usize) -> Vec<bool> {
    (0..width).map(|i| (x >> (width - 1 - i)) & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.bytes().filter(|b| !b.is_ascii_whitespace()).map(|b| b == b'1').collect()
    }

    #[test]
    fn multiplexer_examples() {
        assert!(!oracle_multiplexer(&bits("101101")).unwrap());
        assert!(oracle_multiplexer(&bits("011")).unwrap());
        assert!(!oracle_multiplexer(&bits("000")).unwrap());
        assert!(oracle_multiplexer(&bits("00000")).is_err());
    }

    #[test]
    fn parity_examples() {
        assert!(oracle_even_parity(&bits("000")));
        assert!(!oracle_even_parity(&bits("111")));
        assert!(oracle_even_parity(&bits("10110011100")));
    }

    #[test]
    fn carry_examples() {
        assert!(oracle_carry_one(&bits("11111 00001")).unwrap());
        assert!(!oracle_carry_one(&bits("00000 00000")).unwrap());
        assert!(oracle_carry_one(&bits("10000 10000")).unwrap());
        assert!(oracle_carry_one(&bits("101")).is_err());
    }

    #[test]
    fn majority_examples() {
        assert!(oracle_majority_on(&bits("110")));
        assert!(!oracle_majority_on(&bits("100")));
        assert!(!oracle_majority_on(&bits("010101")));
    }

    #[test]
    fn hierarchical_examples() {
        let hmux: ProblemSpec = "hmux:9".parse().unwrap();
        assert!(hmux.label(&bits("000 111 000")).unwrap());
        assert!(hmux.label(&bits("000 000 000")).unwrap());
        let hmaj: ProblemSpec = "hmaj:9".parse().unwrap();
        assert!(!hmaj.label(&bits("001 010 011")).unwrap());
    }

    #[test]
    fn parses_and_displays_specs() {
        for (text, arity) in [("mux:37", 37), ("eparity:11", 11), ("carry:10", 10), ("hcarry:12", 12)] {
            let spec: ProblemSpec = text.parse().unwrap();
            assert_eq!(spec.arity(), arity);
        }
        let spec: ProblemSpec = "hmaj:9".parse().unwrap();
        assert_eq!(spec.to_string(), "hmajority:9");
        assert_eq!(spec.to_string().parse::<ProblemSpec>().unwrap(), spec);
        for bad in ["mux:7", "carry:9", "hmux:10", "hmux:12", "foo:3", "mux", "mux:x"] {
            assert!(bad.parse::<ProblemSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn enumeration_counts() {
        let parity: ProblemSpec = "eparity:3".parse().unwrap();
        let all = parity.enumerate_all().unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(all.iter().filter(|i| i.label).count(), 4);
        let mux: ProblemSpec = "mux:6".parse().unwrap();
        let all = mux.enumerate_all().unwrap();
        assert_eq!(all.len(), 64);
        assert_eq!(all.iter().filter(|i| i.label).count(), 32);
        let big: ProblemSpec = "mux:37".parse().unwrap();
        assert!(matches!(big.enumerate_all(), Err(Error::Capacity(37))));
    }

    #[test]
    fn samples_are_labelled_by_the_oracle() {
        let mut rng = rand::rngs::mock::StepRng::new(0x9e37_79b9_7f4a_7c15, 0x6a09_e667_f3bc_c909);
        for spec in ["hcarry:12", "mux:11", "eparity:7", "majority:5"] {
            let spec: ProblemSpec = spec.parse().unwrap();
            for _ in 0..200 {
                let inst = spec.sample(&mut rng);
                assert_eq!(inst.label, spec.label(&inst.bits).unwrap());
            }
        }
    }
}
