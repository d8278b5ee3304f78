//! Lower-triangular summability matrices, A-densities and A-statistical limits.
//!
//! A sequence `y` is A-statistically convergent to `L` when, for every `ε > 0`,
//! the A-density `Σ_{k ≤ n, |y_k - L| ≥ ε} a_{nk}` of the exceptional index set
//! tends to zero. The weighted variant replaces `A` by the product `A·N(q)`
//! with the weighted mean matrix `N(q)`, whose entries are
//! `c_{nk} = q_k Σ_{j=k}^{n} a_{nj} / Q_j`.
//!
//! Limits are decided on a finite ladder of rows: the verdict is positive when,
//! for every `ε`, the density at the last rung is at most the threshold and the
//! last three rungs do not increase. Reports keep the raw trajectories.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::FunctionHandle;
use crate::univariate::{OperatorSpec, PreparedOperator};

pub const DEFAULT_LADDER: [usize; 3] = [100, 1_000, 10_000];
pub const DEFAULT_EPSILONS: [f64; 3] = [0.1, 0.02, 0.004];
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Tolerance on "non-increasing" for the ladder tail.
const TAIL_SLACK: f64 = 1e-12;

pub type SequenceFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Nonnegative weights `q_k` with `q_0 > 0`.
#[derive(Clone)]
pub struct WeightSequence {
    name: String,
    q: SequenceFn,
}

impl fmt::Debug for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightSequence({})", self.name)
    }
}

impl WeightSequence {
    pub fn new(name: impl Into<String>, q: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        let q0 = q(0);
        if !(q0 > 0.0 && q0.is_finite()) {
            return Err(Error::InvalidWeights(format!("q_0 must be positive, got {q0}")));
        }
        Ok(Self { name, q: Arc::new(q) })
    }

    /// `q_k ≡ 1`.
    pub fn unit() -> Self {
        Self { name: "unit".into(), q: Arc::new(|_| 1.0) }
    }

    /// `q_k = k + 1`.
    pub fn linear() -> Self {
        Self { name: "linear".into(), q: Arc::new(|k| (k + 1) as f64) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn get(&self, k: usize) -> f64 {
        (self.q)(k)
    }

    /// `Q_0, …, Q_n`. Fails on a negative or non-finite weight.
    pub fn prefix_sums(&self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for k in 0..=n {
            let q = self.get(k);
            if !(q >= 0.0 && q.is_finite()) {
                return Err(Error::InvalidWeights(format!("q_{k} = {q}")));
            }
            acc += q;
            out.push(acc);
        }
        Ok(out)
    }

    /// Finite-horizon proxy for `Q_n → ∞`: `Q_{10⁴} > 10³`.
    pub fn diverges_empirically(&self) -> Result<bool> {
        Ok(self.prefix_sums(10_000)?[10_000] > 1_000.0)
    }
}

/// A nonnegative lower-triangular matrix given by its rows.
#[derive(Clone)]
pub enum SummabilityMatrix {
    Identity,
    /// `a_{nk} = q_k / Q_n` for `k ≤ n`.
    WeightedMean(WeightSequence),
    /// `outer · N(q)`.
    Composed { outer: Box<SummabilityMatrix>, weights: WeightSequence },
    /// Caller-supplied row generator; row `n` must have `n + 1` entries.
    Rows(Arc<dyn Fn(usize) -> Vec<f64> + Send + Sync>),
}

impl fmt::Debug for SummabilityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummabilityMatrix::Identity => write!(f, "Identity"),
            SummabilityMatrix::WeightedMean(q) => write!(f, "WeightedMean({})", q.name()),
            SummabilityMatrix::Composed { outer, weights } => write!(f, "Composed({outer:?}, {})", weights.name()),
            SummabilityMatrix::Rows(_) => write!(f, "Rows(..)"),
        }
    }
}

impl SummabilityMatrix {
    pub fn cesaro() -> Self {
        Self::WeightedMean(WeightSequence::unit())
    }

    pub fn riesz_linear() -> Self {
        Self::WeightedMean(WeightSequence::linear())
    }

    pub fn weighted_mean(q: WeightSequence) -> Self {
        Self::WeightedMean(q)
    }

    /// The product `self · N(q)` used for weighted A-statistical limits.
    pub fn compose_weighted(self, q: WeightSequence) -> Self {
        Self::Composed { outer: Box::new(self), weights: q }
    }

    /// Entries `a_{n0}, …, a_{nn}`.
    pub fn row(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            SummabilityMatrix::Identity => {
                let mut r = vec![0.0; n + 1];
                r[n] = 1.0;
                Ok(r)
            }
            SummabilityMatrix::WeightedMean(q) => {
                let sums = q.prefix_sums(n)?;
                let total = sums[n];
                Ok((0..=n).map(|k| q.get(k) / total).collect())
            }
            SummabilityMatrix::Composed { outer, weights } => {
                let a = outer.row(n)?;
                let sums = weights.prefix_sums(n)?;
                let mut out = vec![0.0; n + 1];
                let mut tail = 0.0;
                for k in (0..=n).rev() {
                    tail += a[k] / sums[k];
                    out[k] = weights.get(k) * tail;
                }
                Ok(out)
            }
            SummabilityMatrix::Rows(gen) => Ok(gen(n)),
        }
    }

    /// Empirical Silverman–Toeplitz diagnostics on rows `10³` and `10⁴`.
    pub fn regularity(&self) -> Result<RegularityReport> {
        let mut nonnegative = true;
        let mut row_sum_error: f64 = 0.0;
        for n in [1_000usize, 10_000] {
            let row = self.row(n)?;
            nonnegative &= row.iter().all(|&a| a >= 0.0);
            row_sum_error = row_sum_error.max((row.iter().sum::<f64>() - 1.0).abs());
        }
        let last = self.row(10_000)?;
        let column_max = last[..=8].iter().copied().fold(0.0, f64::max);
        Ok(RegularityReport {
            nonnegative,
            row_sum_error,
            column_max,
            regular: nonnegative && row_sum_error <= 1e-9 && column_max < 1e-2,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    pub nonnegative: bool,
    /// `max |Σ_k a_{nk} - 1|` over the checked rows.
    pub row_sum_error: f64,
    /// `max_{k ≤ 8} a_{10⁴, k}`.
    pub column_max: f64,
    pub regular: bool,
}

/// Named matrix presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixPreset {
    Cesaro,
    RieszLinear,
    Identity,
}

impl MatrixPreset {
    pub const NAMES: &'static [&'static str] = &["cesaro", "riesz_linear", "identity"];

    pub fn build(self) -> SummabilityMatrix {
        match self {
            MatrixPreset::Cesaro => SummabilityMatrix::cesaro(),
            MatrixPreset::RieszLinear => SummabilityMatrix::riesz_linear(),
            MatrixPreset::Identity => SummabilityMatrix::Identity,
        }
    }
}

impl FromStr for MatrixPreset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cesaro" => Ok(Self::Cesaro),
            "riesz_linear" => Ok(Self::RieszLinear),
            "identity" => Ok(Self::Identity),
            _ => Err(format!("unknown matrix `{s}`; valid: {}", Self::NAMES.join(", "))),
        }
    }
}

/// Weight presets for composing a matrix with a weighted mean; `none` leaves it alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightPreset {
    None,
    Unit,
    Linear,
}

impl WeightPreset {
    pub const NAMES: &'static [&'static str] = &["none", "unit", "linear"];

    pub fn apply(self, matrix: SummabilityMatrix) -> SummabilityMatrix {
        match self {
            WeightPreset::None => matrix,
            WeightPreset::Unit => matrix.compose_weighted(WeightSequence::unit()),
            WeightPreset::Linear => matrix.compose_weighted(WeightSequence::linear()),
        }
    }
}

impl FromStr for WeightPreset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "unit" => Ok(Self::Unit),
            "linear" => Ok(Self::Linear),
            _ => Err(format!("unknown weights `{s}`; valid: {}", Self::NAMES.join(", "))),
        }
    }
}

pub fn is_perfect_square(k: usize) -> bool {
    let r = (k as f64).sqrt() as usize;
    (r.saturating_sub(1)..=r + 1).any(|s| s * s == k)
}

/// Names accepted by [`sequence`].
pub const SEQUENCES: &[&str] = &["zero", "one_over_n", "spike_squares", "alt_sign", "spike_even"];

/// Built-in sequences indexed from 0. `one_over_n` is `1/(k+1)`;
/// `spike_squares` is 1 on the squares `1, 4, 9, …` and 0 elsewhere.
pub fn sequence(name: &str) -> Option<SequenceFn> {
    let s: SequenceFn = match name {
        "zero" => Arc::new(|_| 0.0),
        "one_over_n" => Arc::new(|k| 1.0 / (k + 1) as f64),
        "spike_squares" => Arc::new(|k| if k >= 1 && is_perfect_square(k) { 1.0 } else { 0.0 }),
        "alt_sign" => Arc::new(|k| if k % 2 == 0 { 1.0 } else { -1.0 }),
        "spike_even" => Arc::new(|k| if k % 2 == 0 { 1.0 } else { 0.0 }),
        _ => return None,
    };
    Some(s)
}

/// `Σ_{k ≤ n, indicator(k)} a_{nk}`.
pub fn a_density_partial(matrix: &SummabilityMatrix, indicator: impl Fn(usize) -> bool, n: usize) -> Result<f64> {
    let row = matrix.row(n)?;
    Ok(row.iter().enumerate().filter(|&(k, _)| indicator(k)).map(|(_, a)| a).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatLimitReport {
    pub limit: f64,
    pub epsilons: Vec<f64>,
    pub ladder: Vec<usize>,
    /// `densities[e][i]`: density of `{k : |y_k - L| ≥ ε_e}` in row `ladder[i]`.
    pub densities: Vec<Vec<f64>>,
    pub threshold: f64,
    pub verdict: bool,
}

impl StatLimitReport {
    /// Verdict for a single `ε` trajectory.
    pub fn trajectory_passes(trajectory: &[f64], threshold: f64) -> bool {
        let Some(&last) = trajectory.last() else { return false };
        let tail = &trajectory[trajectory.len().saturating_sub(3)..];
        last <= threshold && tail.windows(2).all(|w| w[1] <= w[0] + TAIL_SLACK)
    }
}

fn check_ladders(epsilons: &[f64], ladder: &[usize]) -> Result<()> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidLadder);
    }
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidEpsilons);
    }
    Ok(())
}

/// Decides `A-lim y = L` from `y_0, …, y_N` with `N ≥ max(ladder)`.
pub fn a_stat_limit_values(
    matrix: &SummabilityMatrix,
    values: &[f64],
    limit: f64,
    epsilons: &[f64],
    ladder: &[usize],
    threshold: f64,
) -> Result<StatLimitReport> {
    check_ladders(epsilons, ladder)?;
    let top = *ladder.last().expect("nonempty ladder");
    assert!(values.len() > top, "sequence has {} terms, ladder needs {}", values.len(), top + 1);

    let rows: Vec<Vec<f64>> = ladder.iter().map(|&n| matrix.row(n)).collect::<Result<_>>()?;
    let densities: Vec<Vec<f64>> = epsilons
        .iter()
        .map(|&eps| {
            rows.iter()
                .map(|row| {
                    row.iter()
                        .zip(values)
                        .filter(|(_, &y)| !((y - limit).abs() < eps))
                        .map(|(a, _)| a)
                        .sum()
                })
                .collect()
        })
        .collect();
    let verdict = densities.iter().all(|t| StatLimitReport::trajectory_passes(t, threshold));
    Ok(StatLimitReport {
        limit,
        epsilons: epsilons.to_vec(),
        ladder: ladder.to_vec(),
        densities,
        threshold,
        verdict,
    })
}

/// [`a_stat_limit_values`] for a sequence given as a function of its index.
pub fn a_stat_limit(
    matrix: &SummabilityMatrix,
    seq: impl Fn(usize) -> f64,
    limit: f64,
    epsilons: &[f64],
    ladder: &[usize],
) -> Result<StatLimitReport> {
    check_ladders(epsilons, ladder)?;
    let top = *ladder.last().expect("nonempty ladder");
    let values: Vec<f64> = (0..=top).map(seq).collect();
    a_stat_limit_values(matrix, &values, limit, epsilons, ladder, DEFAULT_THRESHOLD)
}

/// Degree used for sequence index `k`; indices 0 and 1 reuse degree 2.
pub fn degree_for_index(k: usize) -> usize {
    k.max(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSequenceReport {
    /// `e_k = max_grid |B_{d_k,λ} f - f|` with `d_k = max(k, 2)`.
    pub errors: Vec<f64>,
    pub stat: StatLimitReport,
}

/// Sup-errors of `B_{k,λ} f` along `k` and their A-statistical limit against 0.
pub fn uniform_error_experiment(
    lambda: f64,
    f: &FunctionHandle,
    matrix: &SummabilityMatrix,
    grid: &[f64],
    epsilons: &[f64],
    ladder: &[usize],
) -> Result<ErrorSequenceReport> {
    check_ladders(epsilons, ladder)?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    OperatorSpec::new(2, lambda)?;
    for &x in grid {
        crate::basis::check_point(x)?;
    }
    let top = *ladder.last().expect("nonempty ladder");
    let targets: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    let errors: Vec<f64> = (0..=top)
        .into_par_iter()
        .map(|k| {
            let spec = OperatorSpec::new(degree_for_index(k), lambda).expect("validated");
            let op = PreparedOperator::new(spec, |t| f.eval(t));
            grid.iter().zip(&targets).map(|(&x, &fx)| (op.eval(x) - fx).abs()).fold(0.0, f64::max)
        })
        .collect();
    let stat = a_stat_limit_values(matrix, &errors, 0.0, epsilons, ladder, DEFAULT_THRESHOLD)?;
    Ok(ErrorSequenceReport { errors, stat })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoronovskajaSequenceReport {
    /// `y_k = d_k ((1 + p_k) B_{d_k,λ}(f; x) - f(x))`.
    pub values: Vec<f64>,
    /// `x(1-x) f''(x) / 2`.
    pub target: f64,
    pub stat: StatLimitReport,
    /// Density of `{k : p_k ≠ 0}` along the ladder.
    pub exceptional_density: Vec<f64>,
    /// Exceptional index with the largest `|y_k|`, if any.
    pub largest_exceptional: Option<(usize, f64)>,
}

/// Scaled errors of the perturbed operators `(1 + p_k) B_{k,λ}` at one point,
/// tested for an A-statistical limit at `x(1-x) f''(x)/2`.
pub fn voronovskaja_experiment(
    lambda: f64,
    f: &FunctionHandle,
    x: f64,
    perturbation: impl Fn(usize) -> f64 + Sync,
    matrix: &SummabilityMatrix,
    epsilons: &[f64],
    ladder: &[usize],
) -> Result<VoronovskajaSequenceReport> {
    check_ladders(epsilons, ladder)?;
    crate::basis::check_point(x)?;
    OperatorSpec::new(2, lambda)?;
    let target = crate::bounds::voronovskaja_target(f, x)?;
    let top = *ladder.last().expect("nonempty ladder");
    let fx = f.eval(x);

    let values: Vec<f64> = (0..=top)
        .into_par_iter()
        .map(|k| {
            let d = degree_for_index(k);
            let spec = OperatorSpec::new(d, lambda).expect("validated");
            let b = PreparedOperator::new(spec, |t| f.eval(t)).eval(x);
            d as f64 * ((1.0 + perturbation(k)) * b - fx)
        })
        .collect();
    let stat = a_stat_limit_values(matrix, &values, target, epsilons, ladder, DEFAULT_THRESHOLD)?;

    let exceptional = |k: usize| perturbation(k) != 0.0;
    let exceptional_density = ladder
        .iter()
        .map(|&n| a_density_partial(matrix, &exceptional, n))
        .collect::<Result<Vec<_>>>()?;
    let largest_exceptional = (0..=top)
        .filter(|&k| exceptional(k))
        .map(|k| (k, values[k]))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));

    Ok(VoronovskajaSequenceReport { values, target, stat, exceptional_density, largest_exceptional })
}
