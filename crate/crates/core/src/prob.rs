//! Finite-alphabet probability primitives.
//!
//! All entropic quantities are in nats. Divergences that can be infinite are
//! returned as [`ExtReal`] so that `+∞` is always an explicit value rather
//! than an accidental float produced by `ln(0)`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Distributions are accepted as-is when their mass is within this of 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Distributions whose mass is off by at most this are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// An extended real number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps `±f64::INFINITY` onto the infinite variants.
    ///
    /// Panics on NaN; callers must branch on support before taking logs.
    pub fn from_f64(v: f64) -> Self {
        assert!(!v.is_nan(), "NaN cannot be represented as an extended real");
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Multiplies by a positive scale (unit conversion).
    pub fn scale(self, factor: f64) -> Self {
        debug_assert!(factor > 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * factor),
            other => other,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.to_f64().total_cmp(&other.to_f64())
    }
}

impl std::ops::Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInf => s.serialize_str("inf"),
            ExtReal::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::Finite(v)),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(ExtReal::PosInf),
                "-inf" => Ok(ExtReal::NegInf),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

/// A finite set of symbols, optionally labelled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlphabet("alphabet must have at least one symbol".into()));
        }
        Ok(Alphabet { size, labels: None })
    }

    pub fn with_labels<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet must have at least one symbol".into()));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidAlphabet(format!("duplicate label {a:?}")));
            }
        }
        Ok(Alphabet {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    /// The two-symbol alphabet `H`, `T` used for coins.
    pub fn coin() -> Self {
        Alphabet::with_labels(["H", "T"]).expect("static labels are valid")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, index: usize) -> String {
        match &self.labels {
            Some(l) => l[index].clone(),
            None => index.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|s| s == label),
            None => label.parse::<usize>().ok().filter(|&i| i < self.size),
        }
    }
}

pub(crate) fn same_alphabet(a: &Arc<Alphabet>, b: &Arc<Alphabet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn ensure_same_alphabet(a: &Arc<Alphabet>, b: &Arc<Alphabet>) -> Result<()> {
    if same_alphabet(a, b) {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch(format!(
            "alphabet of size {} vs alphabet of size {}",
            a.size(),
            b.size()
        )))
    }
}

/// A probability vector on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct Distribution {
    alphabet: Arc<Alphabet>,
    weights: Vec<f64>,
}

impl Distribution {
    /// Validates `weights`. Mass off by at most [`RENORMALIZE_TOL`] is
    /// renormalized; anything further is rejected.
    pub fn new(alphabet: Arc<Alphabet>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != alphabet.size() {
            return Err(Error::LengthMismatch {
                expected: alphabet.size(),
                got: weights.len(),
            });
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weight {i} is {w}; weights must be finite and nonnegative"
            )));
        }
        let total: f64 = weights.iter().sum();
        let dev = (total - 1.0).abs();
        let weights = if dev <= NORMALIZATION_TOL {
            weights
        } else if dev <= RENORMALIZE_TOL {
            weights.into_iter().map(|w| w / total).collect()
        } else {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        };
        Ok(Distribution { alphabet, weights })
    }

    /// Coin with heads probability `heads` on the `H`, `T` alphabet.
    pub fn bernoulli(heads: f64) -> Result<Self> {
        Distribution::new(Arc::new(Alphabet::coin()), vec![heads, 1.0 - heads])
    }

    pub fn uniform(alphabet: Arc<Alphabet>) -> Self {
        let n = alphabet.size();
        Distribution {
            alphabet,
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on `symbol`.
    pub fn point(alphabet: Arc<Alphabet>, symbol: usize) -> Result<Self> {
        let mut w = vec![0.0; alphabet.size()];
        *w.get_mut(symbol).ok_or_else(|| {
            Error::InvalidArgument(format!("symbol {symbol} outside alphabet"))
        })? = 1.0;
        Ok(Distribution { alphabet, weights: w })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.weights[symbol]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    pub fn linf_distance(&self, other: &Distribution) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    alphabet: Alphabet,
    weights: Vec<f64>,
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        Distribution::new(Arc::new(r.alphabet), r.weights)
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(d: Distribution) -> Self {
        DistributionRepr {
            alphabet: (*d.alphabet).clone(),
            weights: d.weights,
        }
    }
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn shannon_entropy(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>()
}

/// Relative entropy `Σ p ln(p/q)` on raw weight vectors.
pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> ExtReal {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return ExtReal::PosInf;
            }
            total += a * (a / b).ln();
        }
    }
    // Rounding can leave a tiny negative residue when p ≈ q.
    ExtReal::Finite(total.max(0.0))
}

/// Relative entropy `D(p‖q)` in nats; `+∞` iff some symbol has
/// `p(x) > 0 = q(x)`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<ExtReal> {
    ensure_same_alphabet(&p.alphabet, &q.alphabet)?;
    Ok(kl_raw(&p.weights, &q.weights))
}

/// `L(x) = ln p(x) − ln q(x)` tabulated per symbol.
///
/// Entries are `+∞` where only `q` vanishes and `−∞` where only `p` vanishes.
/// Symbols outside both supports carry `0` unless the table was built with
/// class context (see the solvers), in which case a symbol only one class can
/// produce is decided in favour of that class. Finite entries are grouped by value so that a cumulative
/// statistic can be computed exactly from per-group counts, independent of
/// the order in which symbols were observed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLikelihoodTable {
    #[serde(skip)]
    alphabet: Arc<Alphabet>,
    values: Vec<ExtReal>,
    #[serde(skip)]
    groups: Vec<f64>,
    #[serde(skip)]
    symbol_class: Vec<SymbolClass>,
}

/// How one symbol moves the cumulative log-likelihood statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolClass {
    /// Finite contribution; index into [`LogLikelihoodTable::group_values`].
    Finite(usize),
    PosInf,
    NegInf,
}

impl LogLikelihoodTable {
    pub(crate) fn from_raw(alphabet: Arc<Alphabet>, p: &[f64], q: &[f64]) -> Self {
        Self::build(alphabet, p, q, None)
    }

    /// Like [`LogLikelihoodTable::from_raw`], but symbols outside both
    /// supports are resolved by which class can produce them: `+∞` if no
    /// `Q` element charges the symbol, `−∞` if no `P` element does.
    pub(crate) fn with_class_supports(
        alphabet: Arc<Alphabet>,
        p: &[f64],
        q: &[f64],
        p_mask: &[bool],
        q_mask: &[bool],
    ) -> Self {
        Self::build(alphabet, p, q, Some((p_mask, q_mask)))
    }

    fn build(alphabet: Arc<Alphabet>, p: &[f64], q: &[f64], masks: Option<(&[bool], &[bool])>) -> Self {
        let values: Vec<ExtReal> = p
            .iter()
            .zip(q)
            .enumerate()
            .map(|(x, (&a, &b))| match (a > 0.0, b > 0.0) {
                (true, true) => ExtReal::Finite(a.ln() - b.ln()),
                (true, false) => ExtReal::PosInf,
                (false, true) => ExtReal::NegInf,
                (false, false) => match masks {
                    Some((pm, qm)) if pm[x] && !qm[x] => ExtReal::PosInf,
                    Some((pm, qm)) if !pm[x] && qm[x] => ExtReal::NegInf,
                    _ => ExtReal::Finite(0.0),
                },
            })
            .collect();
        let mut groups: Vec<f64> = values.iter().filter_map(|v| v.finite()).collect();
        groups.sort_by(f64::total_cmp);
        groups.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let symbol_class = values
            .iter()
            .map(|v| match v {
                ExtReal::Finite(x) => SymbolClass::Finite(
                    groups
                        .iter()
                        .position(|g| g.to_bits() == x.to_bits())
                        .expect("value was inserted into groups"),
                ),
                ExtReal::PosInf => SymbolClass::PosInf,
                ExtReal::NegInf => SymbolClass::NegInf,
            })
            .collect();
        LogLikelihoodTable {
            alphabet,
            values,
            groups,
            symbol_class,
        }
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn value(&self, symbol: usize) -> ExtReal {
        self.values[symbol]
    }

    /// Distinct finite values, ascending.
    pub fn group_values(&self) -> &[f64] {
        &self.groups
    }

    pub fn class_of(&self, symbol: usize) -> SymbolClass {
        self.symbol_class[symbol]
    }

    /// `Σ_g counts[g] · value[g]` summed in group order.
    pub fn statistic_from_counts(&self, counts: &[u32]) -> f64 {
        debug_assert_eq!(counts.len(), self.groups.len());
        counts
            .iter()
            .zip(&self.groups)
            .map(|(&c, &v)| c as f64 * v)
            .sum()
    }

    /// `E_r[L]` for a distribution `r`; `None` when `r` puts mass on an
    /// infinite entry.
    pub fn expectation(&self, r: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for (&w, v) in r.iter().zip(&self.values) {
            if w > 0.0 {
                total += w * v.finite()?;
            }
        }
        Some(total)
    }
}

/// Tabulates `L = ln(p/q)`.
pub fn log_likelihood_table(p: &Distribution, q: &Distribution) -> Result<LogLikelihoodTable> {
    ensure_same_alphabet(&p.alphabet, &q.alphabet)?;
    Ok(LogLikelihoodTable::from_raw(p.alphabet.clone(), &p.weights, &q.weights))
}

/// `Σ_x p^λ q^(1−λ)` over the common support (the `0^0 = 0` convention).
pub(crate) fn affinity_raw(p: &[f64], q: &[f64], lambda: f64) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| (lambda * a.ln() + (1.0 - lambda) * b.ln()).exp())
        .sum()
}

pub(crate) fn gamma_raw(p: &[f64], q: &[f64], lambda: f64) -> ExtReal {
    let s = affinity_raw(p, q, lambda);
    if s <= 0.0 {
        ExtReal::PosInf
    } else {
        ExtReal::Finite((-s.ln()).max(0.0))
    }
}

/// `Γ^λ(p, q) = −ln Σ_x p(x)^λ q(x)^(1−λ)`.
pub fn gamma_lambda(p: &Distribution, q: &Distribution, lambda: f64) -> Result<ExtReal> {
    ensure_same_alphabet(&p.alphabet, &q.alphabet)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(gamma_raw(&p.weights, &q.weights, lambda))
}

/// Maximizer and maximum of `λ ↦ Γ^λ(p, q)` over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffPoint {
    pub lambda: f64,
    pub value: ExtReal,
}

impl ChernoffPoint {
    /// The maximizer sits on the boundary, where only one-sided derivatives exist.
    pub fn is_degenerate(&self) -> bool {
        self.lambda <= 0.0 || self.lambda >= 1.0
    }
}

const LAMBDA_TOL: f64 = 1e-10;

pub(crate) fn chernoff_raw(p: &[f64], q: &[f64]) -> ChernoffPoint {
    // f(λ) = Σ_C q e^{λ a}, a = ln p − ln q, is convex; minimize it.
    let terms: Vec<(f64, f64)> = p
        .iter()
        .zip(q)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| (b, a.ln() - b.ln()))
        .collect();
    if terms.is_empty() {
        return ChernoffPoint {
            lambda: 0.5,
            value: ExtReal::PosInf,
        };
    }
    if p == q {
        return ChernoffPoint {
            lambda: 0.5,
            value: ExtReal::ZERO,
        };
    }
    let derivs = |lam: f64| {
        let (mut d1, mut d2) = (0.0, 0.0);
        for &(w, a) in &terms {
            let t = w * (lam * a).exp();
            d1 += t * a;
            d2 += t * a * a;
        }
        (d1, d2)
    };
    let value_at = |lam: f64| gamma_raw(p, q, lam);

    if terms.iter().all(|&(_, a)| a == 0.0) {
        // Constant in λ: p and q agree on the common support.
        return ChernoffPoint {
            lambda: 0.5,
            value: value_at(0.5),
        };
    }
    let (g0, _) = derivs(0.0);
    if g0 >= 0.0 {
        return ChernoffPoint {
            lambda: 0.0,
            value: value_at(0.0),
        };
    }
    let (g1, _) = derivs(1.0);
    if g1 <= 0.0 {
        return ChernoffPoint {
            lambda: 1.0,
            value: value_at(1.0),
        };
    }
    // Safeguarded Newton on f'(λ) = 0 with bracket [lo, hi].
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut lam = 0.5;
    for _ in 0..200 {
        let (d1, d2) = derivs(lam);
        if d1 == 0.0 {
            lo = lam;
            hi = lam;
            break;
        }
        if d1 < 0.0 {
            lo = lam;
        } else {
            hi = lam;
        }
        if hi - lo <= LAMBDA_TOL * 1e-3 {
            break;
        }
        let newton = if d2 > 0.0 { lam - d1 / d2 } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - lam).abs() <= 1e-16 {
            break;
        }
        lam = next;
    }
    let lambda = if hi == lo { lo } else { lam.clamp(lo, hi) };
    ChernoffPoint {
        lambda,
        value: value_at(lambda),
    }
}

/// Chernoff information `Γ*(p, q) = max_λ Γ^λ(p, q)` with its maximizer.
///
/// For `p = q` the maximizer is reported as `0.5` by convention.
pub fn chernoff_info(p: &Distribution, q: &Distribution) -> Result<ChernoffPoint> {
    ensure_same_alphabet(&p.alphabet, &q.alphabet)?;
    Ok(chernoff_raw(&p.weights, &q.weights))
}
