use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};

use super::CmaError;
use crate::dsl::{Program, TokenId};
use crate::fitness::ProbabilityMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// One coordinate per token; the `l` largest pick the program in order.
    SingleGroup,
    /// One block of `|Σ|` coordinates per position; argmax per block.
    MultiGroup,
    /// Multi-group blocks plus a coordinate choosing how many blocks share the positions.
    DynMultiGroup,
    /// One coordinate per position, cut into `|Σ|` normal-quantile bins.
    Bin,
    /// Bin mapping plus a coordinate choosing the program length.
    DynBin,
}

impl FromStr for SchemeKind {
    type Err = CmaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "single" => SchemeKind::SingleGroup,
            "multi" => SchemeKind::MultiGroup,
            "dyn-multi" => SchemeKind::DynMultiGroup,
            "bin" => SchemeKind::Bin,
            "dyn-bin" => SchemeKind::DynBin,
            other => return Err(CmaError::Config(format!("unknown scheme `{other}`"))),
        })
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::SingleGroup => "single",
            SchemeKind::MultiGroup => "multi",
            SchemeKind::DynMultiGroup => "dyn-multi",
            SchemeKind::Bin => "bin",
            SchemeKind::DynBin => "dyn-bin",
        })
    }
}

/// Standard normal quantile, exact at 0, 1/2 and 1.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else if p == 0.5 {
        0.0
    } else {
        Normal::standard().inverse_cdf(p)
    }
}

/// Inner boundaries `Φ⁻¹(j/k)` for `j = 1..k`, splitting the line into `k`
/// equally likely bins.
fn equal_boundaries(k: usize) -> Vec<f64> {
    (1..k).map(|j| normal_quantile(j as f64 / k as f64)).collect()
}

/// Index of the half-open bin `[low, high)` containing `x`.
fn bin_of(x: f64, boundaries: &[f64]) -> usize {
    boundaries.partition_point(|b| *b <= x)
}

/// Decoder from real vectors to programs.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingScheme {
    kind: SchemeKind,
    length: usize,
    registry_len: usize,
    token_bounds: Vec<f64>,
    length_bounds: Vec<f64>,
    divisors: Vec<usize>,
    divisor_bounds: Vec<f64>,
}

impl MappingScheme {
    /// Scheme with equally likely bins.
    pub fn new(kind: SchemeKind, length: usize, registry_len: usize) -> Result<Self, CmaError> {
        if length == 0 || length > crate::dsl::MAX_PROGRAM_LENGTH {
            return Err(CmaError::Config(format!("program length {length} out of range")));
        }
        if registry_len < 2 {
            return Err(CmaError::Config("registry needs at least two tokens".into()));
        }
        if kind == SchemeKind::SingleGroup && length > registry_len {
            return Err(CmaError::Config("single-group mapping needs length <= registry size".into()));
        }
        let divisors: Vec<usize> = (1..=length).filter(|k| length % k == 0).collect();
        Ok(MappingScheme {
            kind,
            length,
            registry_len,
            token_bounds: equal_boundaries(registry_len),
            length_bounds: equal_boundaries(length),
            divisor_bounds: equal_boundaries(divisors.len()),
            divisors,
        })
    }

    /// Bin scheme whose token bins carry the (renormalized) mass of `pmap`.
    pub fn proportional(kind: SchemeKind, length: usize, pmap: &ProbabilityMap) -> Result<Self, CmaError> {
        if !matches!(kind, SchemeKind::Bin | SchemeKind::DynBin) {
            return Err(CmaError::Config("proportional bins apply to bin schemes only".into()));
        }
        let mut scheme = Self::new(kind, length, pmap.len())?;
        let total: f64 = pmap.as_slice().iter().sum();
        if !(total > 0.0) {
            return Err(CmaError::Config("probability map has no mass".into()));
        }
        let mut acc = 0.0;
        scheme.token_bounds = pmap.as_slice()[..pmap.len() - 1]
            .iter()
            .map(|p| {
                acc += p / total;
                normal_quantile(acc)
            })
            .collect();
        Ok(scheme)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn registry_len(&self) -> usize {
        self.registry_len
    }

    /// Length of the vectors this scheme decodes.
    pub fn dimension(&self) -> usize {
        let (l, s) = (self.length, self.registry_len);
        match self.kind {
            SchemeKind::SingleGroup => s,
            SchemeKind::MultiGroup => l * s,
            SchemeKind::DynMultiGroup => l * s + 1,
            SchemeKind::Bin => l,
            SchemeKind::DynBin => l + 1,
        }
    }

    pub fn decode(&self, x: &[f64]) -> Result<Program, CmaError> {
        if x.len() != self.dimension() {
            return Err(CmaError::Dimension { expected: self.dimension(), got: x.len() });
        }
        let (l, s) = (self.length, self.registry_len);
        let ids: Vec<usize> = match self.kind {
            SchemeKind::SingleGroup => top_k(x, l),
            SchemeKind::MultiGroup => x.chunks(s).map(|block| top_k(block, 1)[0]).collect(),
            SchemeKind::DynMultiGroup => {
                let k = self.divisors[bin_of(x[l * s], &self.divisor_bounds)];
                x[..k * s].chunks(s).flat_map(|block| top_k(block, l / k)).collect()
            }
            SchemeKind::Bin => x.iter().map(|v| bin_of(*v, &self.token_bounds)).collect(),
            SchemeKind::DynBin => {
                let len = 1 + bin_of(x[l], &self.length_bounds);
                x[..len].iter().map(|v| bin_of(*v, &self.token_bounds)).collect()
            }
        };
        Ok(Program::new(ids.into_iter().map(TokenId::from).collect()))
    }
}

/// Indices of the `k` largest values, largest first, lower index on ties.
fn top_k(x: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    idx.truncate(k);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SeededRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn ids(p: &Program) -> Vec<usize> {
        p.tokens().iter().map(|t| t.index()).collect()
    }

    #[test]
    fn quantiles() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.25) + 0.6744897501960817).abs() < 1e-9);
        assert!((normal_quantile(0.75) - 0.6744897501960817).abs() < 1e-9);
    }

    #[test]
    fn toy_registry_decodes() {
        let single = MappingScheme::new(SchemeKind::SingleGroup, 2, 4).unwrap();
        assert_eq!(ids(&single.decode(&[0.1, 0.9, 0.5, 0.2]).unwrap()), [1, 2]);

        let multi = MappingScheme::new(SchemeKind::MultiGroup, 2, 4).unwrap();
        assert_eq!(ids(&multi.decode(&[0.1, 0.9, 0.5, 0.2, 0.8, 0.1, 0.1, 0.1]).unwrap()), [1, 0]);

        let bin = MappingScheme::new(SchemeKind::Bin, 1, 4).unwrap();
        assert_eq!(ids(&bin.decode(&[0.0]).unwrap()), [2]);

        let dyn_bin = MappingScheme::new(SchemeKind::DynBin, 2, 4).unwrap();
        let p = dyn_bin.decode(&[-1.0, 0.3, 0.8]).unwrap();
        // -1.0 < -0.674 is the first bin, 0.3 lies in [0, 0.674)
        assert_eq!(ids(&p), [0, 2]);
        assert_eq!(ids(&dyn_bin.decode(&[-1.0, 0.3, -0.8]).unwrap()), [0]);

        let dyn_multi = MappingScheme::new(SchemeKind::DynMultiGroup, 2, 4).unwrap();
        let mut x = vec![0.1, 0.9, 0.5, 0.2, 0.8, 0.1, 0.1, 0.1];
        x.push(-0.5);
        assert_eq!(ids(&dyn_multi.decode(&x).unwrap()), [1, 2]);
        *x.last_mut().unwrap() = 0.5;
        assert_eq!(ids(&dyn_multi.decode(&x).unwrap()), [1, 0]);
    }

    #[test]
    fn ties_prefer_lower_ids() {
        let single = MappingScheme::new(SchemeKind::SingleGroup, 3, 4).unwrap();
        assert_eq!(ids(&single.decode(&[0.5, 0.5, 0.5, 0.5]).unwrap()), [0, 1, 2]);
    }

    #[test]
    fn dimensions() {
        let dims: Vec<usize> = [
            SchemeKind::SingleGroup,
            SchemeKind::MultiGroup,
            SchemeKind::DynMultiGroup,
            SchemeKind::Bin,
            SchemeKind::DynBin,
        ]
        .iter()
        .map(|k| MappingScheme::new(*k, 3, 38).unwrap().dimension())
        .collect();
        assert_eq!(dims, [38, 114, 115, 3, 4]);
        let bin = MappingScheme::new(SchemeKind::Bin, 3, 38).unwrap();
        assert!(matches!(bin.decode(&[0.0; 4]), Err(CmaError::Dimension { .. })));
        assert!(MappingScheme::new(SchemeKind::SingleGroup, 5, 4).is_err());
    }

    #[test]
    fn single_group_never_repeats() {
        let scheme = MappingScheme::new(SchemeKind::SingleGroup, 8, 38).unwrap();
        let mut rng = SeededRng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..38).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut p = ids(&scheme.decode(&x).unwrap());
            p.sort();
            p.dedup();
            assert_eq!(p.len(), 8);
        }
    }

    fn histogram(scheme: &MappingScheme, samples: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeededRng::seed_from_u64(seed);
        let mut counts = vec![0usize; scheme.registry_len()];
        for _ in 0..samples {
            let x: Vec<f64> = (0..scheme.dimension()).map(|_| rng.sample(StandardNormal)).collect();
            counts[scheme.decode(&x).unwrap().tokens()[0].index()] += 1;
        }
        counts.iter().map(|c| *c as f64 / samples as f64).collect()
    }

    #[test]
    fn equal_bins_are_uniform() {
        let scheme = MappingScheme::new(SchemeKind::Bin, 1, 38).unwrap();
        for f in histogram(&scheme, 100_000, 3) {
            assert!((f - 1.0 / 38.0).abs() < 0.02);
        }
    }

    #[test]
    fn proportional_bins_follow_the_map() {
        let mut p: Vec<f64> = (0..38).map(|i| (i % 5) as f64).collect();
        p[7] = 0.0;
        let total: f64 = p.iter().sum();
        let pmap = ProbabilityMap::new(p.iter().map(|v| v / 4.0).collect()).unwrap();
        let scheme = MappingScheme::proportional(SchemeKind::Bin, 1, &pmap).unwrap();
        for (f, want) in histogram(&scheme, 100_000, 4).iter().zip(&p) {
            assert!((f - want / total).abs() < 0.02);
        }
    }

    #[test]
    fn dynamic_length_is_uniform() {
        let scheme = MappingScheme::new(SchemeKind::DynBin, 4, 38).unwrap();
        let mut rng = SeededRng::seed_from_u64(5);
        let mut counts = [0usize; 5];
        let n = 100_000;
        for _ in 0..n {
            let x: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
            let len = scheme.decode(&x).unwrap().len();
            assert!((1..=4).contains(&len));
            counts[len] += 1;
        }
        for c in &counts[1..] {
            assert!((*c as f64 / n as f64 - 0.25).abs() < 0.02);
        }
    }
}
