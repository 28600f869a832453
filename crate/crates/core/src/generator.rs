//! Design-based generators: each output bit evaluates a base function on the
//! seed coordinates picked out by one design set.
//!
//! Naming: the seed has `d` bits, the output table has arity `ell` and
//! length `L = 2^ell`, one design set per output position.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boolean::{BooleanError, TruthTable};
use crate::circuits::{Basis, CircuitError, SearchLimits, SizeTable};
use crate::designs::{design_for, Design, DesignError};
use crate::rng::{self, Rng};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("seed has {got} bits, expected {expected}")]
    SeedLength { got: usize, expected: usize },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Boolean(#[from] BooleanError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type Result<T> = std::result::Result<T, GeneratorError>;

/// Output arities above this are refused (tables must stay materializable).
pub const MAX_OUTPUT_ARITY: usize = 20;

/// A fixed-length bit string, packed little-endian into words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Seed {
    len: usize,
    words: Vec<u64>,
}

impl Seed {
    pub fn zeros(len: usize) -> Self {
        Seed {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn random(len: usize, rng: &mut impl RngCore) -> Self {
        let mut s = Seed::zeros(len);
        for w in s.words.iter_mut() {
            *w = rng.next_u64();
        }
        s.clear_tail();
        s
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Seed::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Bits at `coords`, the `j`-th coordinate landing at bit `j`.
    pub fn gather(&self, coords: &[usize]) -> u64 {
        coords
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &c)| acc | (u64::from(self.get(c)) << j))
    }

    /// Writes the low bits of `value` to `coords`, inverse of [`Seed::gather`].
    pub fn scatter(&mut self, coords: &[usize], value: u64) {
        for (j, &c) in coords.iter().enumerate() {
            self.set(c, (value >> j) & 1 == 1);
        }
    }
}

/// Generator family over a fixed base function and design.
#[derive(Debug, Clone)]
pub struct NwFamily {
    base: TruthTable,
    design: Design,
    ell: usize,
}

impl NwFamily {
    /// The design must have set size `base.n()` and at least `2^ell` sets;
    /// extra sets are dropped.
    pub fn new(base: TruthTable, design: Design, ell: usize) -> Result<Self> {
        if ell == 0 || ell > MAX_OUTPUT_ARITY {
            return Err(GeneratorError::InvalidParameter(format!(
                "output arity must be in 1..={MAX_OUTPUT_ARITY}, got {ell}"
            )));
        }
        if design.k != base.n() {
            return Err(GeneratorError::InvalidParameter(format!(
                "design sets have size {}, base function has arity {}",
                design.k,
                base.n()
            )));
        }
        let design = design.truncate_sets(1 << ell)?;
        Ok(NwFamily { base, design, ell })
    }

    /// Uses the polynomial design picked by [`design_for`].
    pub fn with_default_design(base: TruthTable, ell: usize) -> Result<Self> {
        let design = design_for(base.n(), 1 << ell)?;
        NwFamily::new(base, design, ell)
    }

    pub fn base(&self) -> &TruthTable {
        &self.base
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn output_len(&self) -> usize {
        1 << self.ell
    }

    pub fn seed_len(&self) -> usize {
        self.design.d
    }

    /// Sorted seed coordinates read by output position `w`.
    pub fn set(&self, w: usize) -> &[usize] {
        &self.design.sets[w]
    }

    /// Input to the base function for position `w`.
    pub fn base_input(&self, z: &Seed, w: usize) -> Result<u64> {
        self.check(z, w)?;
        Ok(z.gather(self.set(w)))
    }

    fn check(&self, z: &Seed, w: usize) -> Result<()> {
        if z.len() != self.seed_len() {
            return Err(GeneratorError::SeedLength {
                got: z.len(),
                expected: self.seed_len(),
            });
        }
        if w >= self.output_len() {
            return Err(GeneratorError::InvalidParameter(format!(
                "position {w} outside 0..{}",
                self.output_len()
            )));
        }
        Ok(())
    }

    pub fn nw_eval(&self, z: &Seed, w: usize) -> Result<bool> {
        Ok(self.base.get(self.base_input(z, w)?))
    }

    pub fn nw_truthtable(&self, z: &Seed) -> Result<TruthTable> {
        self.check(z, 0)?;
        let bits: Vec<bool> = (0..self.output_len())
            .map(|w| self.base.get(z.gather(self.set(w))))
            .collect();
        Ok(TruthTable::from_fn(self.ell, |w| bits[w as usize])?)
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> TruthTable {
        let z = Seed::random(self.seed_len(), rng);
        self.nw_truthtable(&z).expect("seed has the right length")
    }

    /// `count` samples from independent streams derived from `seed`, so the
    /// result does not depend on thread scheduling.
    pub fn sample_batch(&self, seed: u64, count: usize) -> Vec<TruthTable> {
        (0..count)
            .into_par_iter()
            .map(|i| self.sample(&mut rng::derive(seed, "nw-sample", i as u64)))
            .collect()
    }
}

/// Generator over `f` XOR-amplified `t` times, tagged with the target
/// accuracy `gamma` a reconstruction is expected to reach.
#[derive(Debug, Clone)]
pub struct BlackBoxGenerator {
    f: TruthTable,
    gamma: f64,
    t: usize,
    family: NwFamily,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub gamma: f64,
    pub ell: usize,
    pub t: usize,
    pub seed_len: usize,
    pub set_size: usize,
    pub overlap: usize,
    pub sets: usize,
}

impl BlackBoxGenerator {
    pub fn new(f: TruthTable, gamma: f64, t: usize, ell: usize) -> Result<Self> {
        let k = t
            .checked_mul(f.n())
            .filter(|&k| (1..=crate::boolean::MAX_ARITY).contains(&k))
            .ok_or_else(|| GeneratorError::InvalidParameter(format!("t*n out of range (t={t})")))?;
        let design = design_for(k, 1 << ell.min(MAX_OUTPUT_ARITY))?;
        Self::with_design(f, gamma, t, ell, design)
    }

    pub fn with_design(f: TruthTable, gamma: f64, t: usize, ell: usize, design: Design) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(GeneratorError::InvalidParameter(format!("gamma={gamma} not in (0, 1/2)")));
        }
        let amplified = f.xor_amplify(t)?;
        let family = NwFamily::new(amplified, design, ell)?;
        Ok(BlackBoxGenerator { f, gamma, t, family })
    }

    pub fn f(&self) -> &TruthTable {
        &self.f
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn family(&self) -> &NwFamily {
        &self.family
    }

    pub fn params(&self) -> GeneratorParams {
        let d = self.family.design();
        GeneratorParams {
            n: self.f.n(),
            gamma: self.gamma,
            ell: self.family.ell(),
            t: self.t,
            seed_len: d.d,
            set_size: d.k,
            overlap: d.max_intersection(),
            sets: d.m(),
        }
    }

    pub fn sample_wl(&self, rng: &mut impl RngCore) -> TruthTable {
        self.family.sample(rng)
    }
}

/// Circuit complexity of sampled generator outputs next to that of all
/// tables of the same arity.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexityReport {
    pub ell: usize,
    pub basis: String,
    pub samples: usize,
    /// Exact minimum size per sample; `None` when above `budget`.
    pub sample_sizes: Vec<Option<usize>>,
    pub budget: usize,
    pub sample_max: Option<usize>,
    pub sample_mean: f64,
    /// Hardest table of arity `ell`, if every table fits the budget.
    pub all_tables_max: Option<usize>,
    pub all_tables_mean: Option<f64>,
}

/// Needs `ell <= 4`. The search budget defaults to the worst case over all
/// tables of that arity when it is small enough to compute (`ell <= 3`).
pub fn family_complexity_check(
    gen: &BlackBoxGenerator,
    basis: &Basis,
    samples: usize,
    budget: usize,
    rng: &mut Rng,
) -> Result<ComplexityReport> {
    let ell = gen.family().ell();
    let table = SizeTable::compute(ell, basis, budget, SearchLimits::default())?;
    let sample_sizes: Vec<Option<usize>> = (0..samples)
        .map(|_| table.min_size(&gen.sample_wl(rng)))
        .collect();
    let found: Vec<usize> = sample_sizes.iter().flatten().copied().collect();
    let sample_mean = if found.is_empty() {
        0.0
    } else {
        found.iter().sum::<usize>() as f64 / found.len() as f64
    };
    let (all_tables_max, all_tables_mean) = if table.complete() {
        let total = 1u64 << (1 << ell);
        let sizes: Vec<usize> = (0..total)
            .map(|t| table.min_size_of(t).expect("complete table"))
            .collect();
        (
            sizes.iter().copied().max(),
            Some(sizes.iter().sum::<usize>() as f64 / total as f64),
        )
    } else {
        (None, None)
    };
    Ok(ComplexityReport {
        ell,
        basis: basis.name().to_string(),
        samples,
        sample_sizes,
        budget,
        sample_max: found.iter().copied().max(),
        sample_mean,
        all_tables_max,
        all_tables_mean,
    })
}
