//! Hidden failures among predicted-clean modules.
//!
//! Each of the `l` predicted-clean modules is independently misclassified
//! with probability `p`, so the number of hidden failures `X` is
//! Binomial(l, p). The PMF uses Loader's saddle-point expansion, which keeps
//! relative error near machine precision for `l` in the millions where a
//! log-gamma difference would lose digits to cancellation.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailurePopulation {
    l: u64,
    p: f64,
}

/// How `sample` draws `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMethod {
    /// Inversion of the cumulative PMF table (see [`FailureSampler`]).
    #[default]
    Exact,
    /// `l` Bernoulli indicators summed one by one.
    Indicators,
}

impl FailurePopulation {
    pub fn new(l: u64, p: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::domain(
                "l",
                "need at least one predicted-clean module",
            ));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::DegenerateProbability { p });
        }
        Ok(Self { l, p })
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `E[X] = l·p`.
    pub fn expected_failures(&self) -> f64 {
        self.l as f64 * self.p
    }

    pub fn ln_pmf(&self, k: u64) -> Result<f64> {
        if k > self.l {
            return Err(Error::OutOfRange { k, l: self.l });
        }
        Ok(ln_binomial_pmf(k, self.l, self.p))
    }

    /// `Pr[X = k]`.
    pub fn pmf(&self, k: u64) -> Result<f64> {
        self.ln_pmf(k).map(f64::exp)
    }

    /// `Pr[X < threshold]` with strict inequality, so an integer threshold
    /// excludes itself.
    pub fn cdf_below(&self, threshold: f64) -> f64 {
        if threshold.is_nan() {
            return f64::NAN;
        }
        if threshold <= 0.0 {
            return 0.0;
        }
        if threshold > self.l as f64 {
            return 1.0;
        }
        // threshold in (0, l]: largest admissible k is ceil(threshold) - 1 < l
        let top = threshold.ceil() as u64 - 1;
        let mut acc = NeumaierSum::default();
        for k in 0..=top {
            acc.add(ln_binomial_pmf(k, self.l, self.p).exp());
        }
        acc.total().min(1.0)
    }

    /// One draw of `X`. Builds a [`FailureSampler`] per call; keep one
    /// around for repeated draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, method: SamplingMethod) -> u64 {
        FailureSampler::new(*self, method).sample(rng)
    }
}

/// Table entries below `exp(LN_TABLE_CUTOFF)` are dropped; their total mass
/// is far below the 2^-53 resolution of a uniform draw.
const LN_TABLE_CUTOFF: f64 = -50.0;

/// Repeated draws of `X` for one population.
///
/// The exact method inverts a cumulative table of the PMF over the range
/// where it is non-negligible, so each draw is one uniform and a binary
/// search.
#[derive(Debug, Clone)]
pub struct FailureSampler {
    pop: FailurePopulation,
    method: SamplingMethod,
    offset: u64,
    cumulative: Vec<f64>,
    coin: Bernoulli,
}

impl FailureSampler {
    pub fn new(pop: FailurePopulation, method: SamplingMethod) -> Self {
        let (offset, cumulative) = match method {
            SamplingMethod::Exact => pmf_table(&pop),
            SamplingMethod::Indicators => (0, Vec::new()),
        };
        Self {
            pop,
            method,
            offset,
            cumulative,
            coin: Bernoulli::new(pop.p).expect("validated population"),
        }
    }

    pub fn population(&self) -> &FailurePopulation {
        &self.pop
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.method {
            SamplingMethod::Exact => {
                let u: f64 = rng.random();
                let i = self.cumulative.partition_point(|&c| c <= u);
                self.offset + i.min(self.cumulative.len() - 1) as u64
            }
            SamplingMethod::Indicators => {
                (0..self.pop.l).filter(|_| self.coin.sample(rng)).count() as u64
            }
        }
    }
}

/// `(first k, running sums of Pr[X = k])` over the non-negligible range.
fn pmf_table(pop: &FailurePopulation) -> (u64, Vec<f64>) {
    let (l, p) = (pop.l, pop.p);
    let mode = (((l + 1) as f64 * p).floor() as u64).min(l);
    let mut lo = mode;
    while lo > 0 && ln_binomial_pmf(lo - 1, l, p) > LN_TABLE_CUTOFF {
        lo -= 1;
    }
    let mut acc = NeumaierSum::default();
    let mut cumulative = Vec::new();
    for k in lo..=l {
        let ln = ln_binomial_pmf(k, l, p);
        if k > mode && ln <= LN_TABLE_CUTOFF {
            break;
        }
        acc.add(ln.exp());
        cumulative.push(acc.total());
    }
    (lo, cumulative)
}

pub fn expected_failures(pop: &FailurePopulation) -> f64 {
    pop.expected_failures()
}

pub fn binomial_pmf(pop: &FailurePopulation, k: u64) -> Result<f64> {
    pop.pmf(k)
}

pub fn binomial_cdf_below(pop: &FailurePopulation, threshold: f64) -> f64 {
    pop.cdf_below(threshold)
}

pub fn sample_failures<R: Rng + ?Sized>(
    pop: &FailurePopulation,
    rng: &mut R,
    method: SamplingMethod,
) -> u64 {
    pop.sample(rng, method)
}

/// Compensated summation (Neumaier's variant of Kahan).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

// stirlerr(n) = ln(n!) - ln(sqrt(2 pi n) (n/e)^n), tabulated at half-integers up to 15
const SFERR_HALVES: [f64; 31] = [
    0.0,
    0.153_426_409_720_027_345_291_384_8,
    0.081_061_466_795_327_258_219_670_2,
    0.054_814_121_051_917_653_896_139_0,
    0.041_340_695_955_409_294_093_822_1,
    0.033_162_873_519_936_287_485_110_48,
    0.027_677_925_684_998_339_148_789_29,
    0.023_746_163_656_297_495_971_329_20,
    0.020_790_672_103_765_093_111_522_77,
    0.018_488_450_532_673_185_230_779_34,
    0.016_644_691_189_821_192_163_194_87,
    0.015_134_973_221_917_378_873_512_55,
    0.013_876_128_823_070_747_998_745_73,
    0.012_810_465_242_920_226_924_249_86,
    0.011_896_709_945_891_770_095_055_72,
    0.011_104_559_758_206_917_326_629_91,
    0.010_411_265_261_972_096_497_478_567,
    0.009_799_416_126_158_803_298_389_475,
    0.009_255_462_182_712_732_917_728_637,
    0.008_768_700_134_139_385_462_952_823,
    0.008_330_563_433_362_871_256_469_318,
    0.007_934_114_564_314_020_547_248_100,
    0.007_573_675_487_951_840_794_972_024,
    0.007_244_554_301_320_383_179_543_912,
    0.006_942_840_107_209_529_865_664_152,
    0.006_665_247_032_707_682_442_354_394,
    0.006_408_994_188_004_207_068_439_631,
    0.006_171_712_263_039_457_647_532_867,
    0.005_951_370_112_758_847_735_624_416,
    0.005_746_216_513_010_115_682_023_589,
    0.005_554_733_551_962_801_371_038_690,
];

fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        return SFERR_HALVES[(n + n) as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, evaluated without cancellation when
/// `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / np).ln() + np - x
}

fn ln_binomial_pmf(k: u64, l: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    let (x, n) = (k as f64, l as f64);
    if k == 0 {
        return n * (-p).ln_1p();
    }
    if k == l {
        return n * p.ln();
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = LN_2PI + x.ln() + (-x / n).ln_1p();
    lc - 0.5 * lf
}
