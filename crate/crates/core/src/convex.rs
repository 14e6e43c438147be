//! Finitely generated convex classes of distributions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::polytope_linf_distance;
use crate::prob::{ensure_same_alphabet, Alphabet, Distribution, NORMALIZATION_TOL, RENORMALIZE_TOL};

/// Vertices closer than this in ℓ∞ are merged.
pub const DEDUP_TOL: f64 = 1e-12;
/// Largest grid [`ConvexClass::weight_grid`] will enumerate.
pub const GRID_LIMIT: u128 = 10_000_000;

/// Convex-combination coefficients over the vertices of a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixWeights(Vec<f64>);

impl MixWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("mixture weights must be nonempty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mixture weight {w} is not a finite nonnegative number"
            )));
        }
        let total: f64 = weights.iter().sum();
        let dev = (total - 1.0).abs();
        if dev <= NORMALIZATION_TOL {
            Ok(MixWeights(weights))
        } else if dev <= RENORMALIZE_TOL {
            Ok(MixWeights(weights.into_iter().map(|w| w / total).collect()))
        } else {
            Err(Error::InvalidArgument(format!("mixture weights sum to {total}")))
        }
    }

    /// All mass on vertex `index` of a `len`-vertex class.
    pub fn vertex(len: usize, index: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        MixWeights(w)
    }

    pub fn uniform(len: usize) -> Self {
        MixWeights(vec![1.0 / len as f64; len])
    }

    pub(crate) fn from_raw(w: Vec<f64>) -> Self {
        MixWeights(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// The convex hull of a nonempty list of distributions on one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexClass {
    alphabet: Arc<Alphabet>,
    vertices: Vec<Distribution>,
}

impl ConvexClass {
    pub fn new(vertices: Vec<Distribution>) -> Result<Self> {
        Self::from_vertices_with_map(vertices).map(|(c, _)| c)
    }

    /// Like [`ConvexClass::new`], also returning for each input vertex the
    /// index of the (deduplicated) class vertex it became.
    pub fn from_vertices_with_map(vertices: Vec<Distribution>) -> Result<(Self, Vec<usize>)> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidArgument("a convex class needs at least one vertex".into()))?;
        let alphabet = first.alphabet().clone();
        let mut kept: Vec<Distribution> = Vec::new();
        let mut map = Vec::with_capacity(vertices.len());
        for v in vertices {
            ensure_same_alphabet(&alphabet, v.alphabet())?;
            match kept.iter().position(|k| k.linf_distance(&v) <= DEDUP_TOL) {
                Some(i) => map.push(i),
                None => {
                    map.push(kept.len());
                    kept.push(v);
                }
            }
        }
        Ok((
            ConvexClass {
                alphabet,
                vertices: kept,
            },
            map,
        ))
    }

    pub fn singleton(d: Distribution) -> Self {
        ConvexClass {
            alphabet: d.alphabet().clone(),
            vertices: vec![d],
        }
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn vertices(&self) -> &[Distribution] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Distribution {
        &self.vertices[i]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.size()
    }

    /// Raw mixture `Σ w_i v_i` without validation.
    pub(crate) fn mix_raw(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.alphabet.size()];
        for (wi, v) in w.iter().zip(&self.vertices) {
            if *wi != 0.0 {
                for (o, p) in out.iter_mut().zip(v.weights()) {
                    *o += wi * p;
                }
            }
        }
        out
    }

    pub fn mix(&self, w: &MixWeights) -> Result<Distribution> {
        if w.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: w.len(),
            });
        }
        Distribution::new(self.alphabet.clone(), self.mix_raw(w.as_slice()))
    }

    /// `min_w ‖mix(w) − p‖∞` with an optimal `w`, by linear programming.
    pub fn linf_distance(&self, p: &Distribution) -> Result<(f64, MixWeights)> {
        ensure_same_alphabet(&self.alphabet, p.alphabet())?;
        let verts: Vec<&[f64]> = self.vertices.iter().map(|v| v.weights()).collect();
        let (d, w, _) = polytope_linf_distance(&verts, &[p.weights()])?;
        Ok((d, MixWeights(w)))
    }

    /// Whether `p` lies within ℓ∞ distance `tol` of the class.
    pub fn contains(&self, p: &Distribution, tol: f64) -> Result<bool> {
        ensure_same_alphabet(&self.alphabet, p.alphabet())?;
        if self.vertices.iter().any(|v| v.linf_distance(p) <= tol) {
            return Ok(true);
        }
        let (d, _) = self.linf_distance(p)?;
        // Allow for simplex round-off on top of the requested tolerance.
        Ok(d <= tol + 1e-14)
    }

    /// Symbols charged by at least one vertex.
    pub fn support_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.alphabet.size()];
        for v in &self.vertices {
            for (m, &w) in mask.iter_mut().zip(v.weights()) {
                *m |= w > 0.0;
            }
        }
        mask
    }

    /// All simplex lattice points with denominator `resolution`.
    pub fn weight_grid(&self, resolution: u32) -> Result<WeightGrid> {
        WeightGrid::new(self.len(), resolution)
    }
}

/// `C(resolution + k − 1, k − 1)`, saturating at `u128::MAX`.
pub fn grid_count(k: usize, resolution: u32) -> u128 {
    let n = resolution as u128 + k as u128 - 1;
    let r = (k as u128 - 1).min(resolution as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Compositions of a fixed total into `k` nonnegative parts, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct Compositions {
    parts: Vec<u32>,
    total: u32,
    done: bool,
}

impl Compositions {
    pub fn new(k: usize, total: u32) -> Self {
        assert!(k >= 1);
        let mut parts = vec![0; k];
        parts[k - 1] = total;
        Compositions {
            parts,
            total,
            done: false,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.parts.clone();
        let k = self.parts.len();
        if k == 1 || self.parts[0] == self.total {
            self.done = true;
        } else {
            // Rightmost position whose tail still has mass to borrow.
            let mut tail = self.parts[k - 1];
            let mut i = k - 2;
            while tail == 0 {
                tail += self.parts[i];
                i -= 1;
            }
            self.parts[i] += 1;
            for p in &mut self.parts[i + 1..] {
                *p = 0;
            }
            self.parts[k - 1] = tail - 1;
        }
        Some(out)
    }
}

/// Iterator over [`MixWeights`] on a simplex lattice.
#[derive(Debug, Clone)]
pub struct WeightGrid {
    inner: Compositions,
    resolution: u32,
    remaining: u128,
}

impl WeightGrid {
    pub fn new(k: usize, resolution: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("weight grid over zero vertices".into()));
        }
        if resolution == 0 {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let count = grid_count(k, resolution);
        if count > GRID_LIMIT {
            return Err(Error::GridOverflow {
                count,
                limit: GRID_LIMIT,
            });
        }
        Ok(WeightGrid {
            inner: Compositions::new(k, resolution),
            resolution,
            remaining: count,
        })
    }

    pub fn count(&self) -> u128 {
        self.remaining
    }
}

impl Iterator for WeightGrid {
    type Item = MixWeights;

    fn next(&mut self) -> Option<MixWeights> {
        let c = self.inner.next()?;
        self.remaining -= 1;
        let r = self.resolution as f64;
        Some(MixWeights(c.into_iter().map(|x| x as f64 / r).collect()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for WeightGrid {}
