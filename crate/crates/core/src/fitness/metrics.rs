//! Closeness metrics between a candidate and a known target program.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{random_program, DslError, Program, Registry, TokenId};

/// Distinct token ids of a program, sorted.
pub fn elems(program: &Program) -> Vec<TokenId> {
    let mut ids = program.tokens().to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Number of distinct tokens the two programs share.
pub fn fitness_cf(candidate: &Program, target: &Program) -> usize {
    let (a, b) = (elems(candidate), elems(target));
    a.iter().filter(|t| b.binary_search(t).is_ok()).count()
}

/// How common structure is measured by [`fitness_lcs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LcsMode {
    /// Classical longest common subsequence.
    Subsequence,
    /// Longest common contiguous run.
    #[default]
    Substring,
}

pub fn fitness_lcs(candidate: &Program, target: &Program, mode: LcsMode) -> usize {
    let (a, b) = (candidate.tokens(), target.tokens());
    match mode {
        LcsMode::Subsequence => lcs_subsequence(a, b),
        LcsMode::Substring => lcs_substring(a, b),
    }
}

fn lcs_subsequence<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn lcs_substring<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut best = 0;
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Independent membership probability per registry token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityMap(Vec<f64>);

impl ProbabilityMap {
    /// Every entry must lie in `[0, 1]`.
    pub fn new(p: Vec<f64>) -> Result<Self, DslError> {
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DslError::Parse(format!("probability {bad} outside [0, 1]")));
        }
        Ok(ProbabilityMap(p))
    }

    pub fn zeros(len: usize) -> Self {
        ProbabilityMap(vec![0.0; len])
    }

    /// 1 for every token of `target`, 0 elsewhere.
    pub fn indicator(target: &Program, registry_len: usize) -> Self {
        let mut p = vec![0.0; registry_len];
        for t in target.tokens() {
            p[t.index()] = 1.0;
        }
        ProbabilityMap(p)
    }

    /// Fraction of `samples` random programs of `length` containing each token.
    ///
    /// Prior used when no learned model provides a map.
    pub fn empirical<R: Rng + ?Sized>(
        registry: &Registry,
        length: usize,
        samples: usize,
        rng: &mut R,
    ) -> Result<Self, DslError> {
        let mut counts = vec![0usize; registry.len()];
        for _ in 0..samples {
            for t in elems(&random_program(length, rng, registry)?) {
                counts[t.index()] += 1;
            }
        }
        let n = samples.max(1) as f64;
        Ok(ProbabilityMap(counts.into_iter().map(|c| c as f64 / n).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: TokenId) -> f64 {
        self.0[id.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ProbabilityMap {
    type Error = DslError;

    fn try_from(p: Vec<f64>) -> Result<Self, Self::Error> {
        ProbabilityMap::new(p)
    }
}

impl From<ProbabilityMap> for Vec<f64> {
    fn from(p: ProbabilityMap) -> Self {
        p.0
    }
}

/// Sum of `p_k` over the distinct tokens of `candidate`.
///
/// Panics if the map is shorter than a token id in `candidate`.
pub fn fitness_fp(candidate: &Program, pmap: &ProbabilityMap) -> f64 {
    elems(candidate).into_iter().map(|t| pmap.get(t)).sum()
}
