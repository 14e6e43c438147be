use num_complex::Complex64;

use crate::error::{Error, Result};

use super::linalg::{hermitian_deviation, hermitian_eigen, kron, max_abs, outer, trace, CMatrix, HermitianEigen, MAX_DIM};

/// Hermiticity tolerance for states (entrywise).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[−EIGEN_TOL, 0)` are clipped to zero; lower ones reject.
pub const EIGEN_TOL: f64 = 1e-10;
/// Trace and completeness tolerance.
pub const TRACE_TOL: f64 = 1e-10;

/// A positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    eigen: HermitianEigen,
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || d != matrix.ncols() {
            return Err(Error::InvalidState(format!(
                "expected a nonempty square matrix, got {}x{}",
                d,
                matrix.ncols()
            )));
        }
        if d > MAX_DIM {
            return Err(Error::InvalidState(format!("dimension {d} exceeds the cap of {MAX_DIM}")));
        }
        let dev = hermitian_deviation(&matrix);
        if !(dev <= HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = trace(&matrix);
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let mut eigen = hermitian_eigen(&matrix)?;
        let min = eigen.values[0];
        if min < -EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        let matrix = if min < 0.0 {
            eigen.values.iter_mut().for_each(|l| *l = l.max(0.0));
            let total: f64 = eigen.values.iter().sum();
            eigen.values.iter_mut().for_each(|l| *l /= total);
            eigen.reconstruct()
        } else {
            CMatrix::from_fn(d, d, |i, j| (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5)
        };
        Ok(DensityMatrix { matrix, eigen })
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("state vector has norm {norm}, expected 1")));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::new(outer(&v))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::new(CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0))
    }

    /// `|i⟩⟨i|` in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::InvalidState(format!("basis index {i} out of range for dimension {d}")));
        }
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        Self::new(m)
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let d = probabilities.len();
        Self::new(CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(probabilities[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// `Σ w_i ρ_i`; zero weights are skipped so a one-hot mixture returns
    /// its vertex exactly.
    pub fn mix(states: &[&DensityMatrix], weights: &[f64]) -> Result<Self> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: states.len(),
                got: weights.len(),
            });
        }
        let d = states[0].dim();
        if states.iter().any(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch("mixed states have different dimensions".into()));
        }
        let mut m = CMatrix::zeros(d, d);
        for (s, &w) in states.iter().zip(weights) {
            if w != 0.0 {
                m += s.matrix() * Complex64::new(w, 0.0);
            }
        }
        Self::new(m)
    }

    /// `ρ ⊗ τ`.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        Self::new(kron(&self.matrix, &other.matrix))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Spectral decomposition (eigenvalues ascending, clipped at zero).
    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }
}

/// Completeness check shared by POVMs and their factors.
fn check_effects(effects: &[CMatrix]) -> Result<usize> {
    let first = effects
        .first()
        .ok_or_else(|| Error::InvalidMeasurement("a POVM needs at least one effect".into()))?;
    let d = first.nrows();
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidMeasurement(format!("unsupported dimension {d}")));
    }
    let mut sum = CMatrix::zeros(d, d);
    for (i, e) in effects.iter().enumerate() {
        if e.nrows() != d || e.ncols() != d {
            return Err(Error::InvalidMeasurement(format!(
                "effect {i} is {}x{}, expected {d}x{d}",
                e.nrows(),
                e.ncols()
            )));
        }
        let dev = hermitian_deviation(e);
        if !(dev <= TRACE_TOL) {
            return Err(Error::InvalidMeasurement(format!("effect {i} is not Hermitian (deviation {dev:e})")));
        }
        let min = hermitian_eigen(e)?.values[0];
        if min < -EIGEN_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "effect {i} has negative eigenvalue {min:e}"
            )));
        }
        sum += e;
    }
    let dev = max_abs(&(sum - CMatrix::identity(d, d)));
    if !(dev <= TRACE_TOL) {
        return Err(Error::InvalidMeasurement(format!(
            "effects sum to the identity only within {dev:e}"
        )));
    }
    Ok(d)
}

/// A positive-operator-valued measure: PSD effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let dim = check_effects(&effects)?;
        let effects = effects
            .into_iter()
            .map(|e| CMatrix::from_fn(dim, dim, |i, j| (e[(i, j)] + e[(j, i)].conj()) * 0.5))
            .collect();
        Ok(Povm { dim, effects })
    }

    /// Projective measurement in the computational basis.
    pub fn computational(d: usize) -> Result<Self> {
        Self::new(
            (0..d)
                .map(|i| {
                    let mut m = CMatrix::zeros(d, d);
                    m[(i, i)] = Complex64::new(1.0, 0.0);
                    m
                })
                .collect(),
        )
    }

    /// Projective measurement onto an orthonormal basis (vectors listed).
    pub fn from_basis(vectors: &[Vec<Complex64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| outer(v)).collect())
    }

    /// Two-outcome measurement `{E, I − E}`.
    pub fn binary(effect: CMatrix) -> Result<Self> {
        let d = effect.nrows();
        let rest = CMatrix::identity(d, d) - &effect;
        Self::new(vec![effect, rest])
    }

    /// `M ⊗ N` with outcome `(i, j)` at index `i·|N| + j`.
    pub fn product(a: &Povm, b: &Povm) -> Result<Self> {
        let mut effects = Vec::with_capacity(a.len() * b.len());
        for x in &a.effects {
            for y in &b.effects {
                effects.push(kron(x, y));
            }
        }
        Self::new(effects)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// A one-way LOCC measurement: Alice measures `X`, tells Bob the outcome
/// `i`, and Bob measures `Y_i`. Effects are `X_i ⊗ Y_{i,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneWayLocc {
    alice: Povm,
    bob: Vec<Povm>,
    povm: Povm,
}

impl OneWayLocc {
    pub fn new(alice: Povm, bob: Vec<Povm>) -> Result<Self> {
        if bob.len() != alice.len() {
            return Err(Error::InvalidMeasurement(format!(
                "Alice has {} outcomes but {} conditional measurements were given",
                alice.len(),
                bob.len()
            )));
        }
        if bob.iter().any(|b| b.dim() != bob[0].dim()) {
            return Err(Error::InvalidMeasurement("Bob's measurements act on different dimensions".into()));
        }
        let mut effects = Vec::new();
        for (x, ys) in alice.effects.iter().zip(&bob) {
            for y in &ys.effects {
                effects.push(kron(x, y));
            }
        }
        let povm = Povm::new(effects)?;
        Ok(OneWayLocc { alice, bob, povm })
    }

    /// Both parties measure in their computational bases.
    pub fn local_bases(d_a: usize, d_b: usize) -> Result<Self> {
        let b = Povm::computational(d_b)?;
        Self::new(Povm::computational(d_a)?, vec![b; d_a])
    }

    pub fn alice(&self) -> &Povm {
        &self.alice
    }

    pub fn bob(&self) -> &[Povm] {
        &self.bob
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }
}

/// Convex hull of finitely many states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateClass {
    dim: usize,
    vertices: Vec<DensityMatrix>,
}

impl StateClass {
    pub fn new(vertices: Vec<DensityMatrix>) -> Result<Self> {
        let dim = vertices
            .first()
            .ok_or_else(|| Error::InvalidState("a state class needs at least one vertex".into()))?
            .dim();
        if let Some(i) = vertices.iter().position(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "vertex {i} has dimension {}, expected {dim}",
                vertices[i].dim()
            )));
        }
        Ok(StateClass { dim, vertices })
    }

    pub fn singleton(state: DensityMatrix) -> Self {
        StateClass {
            dim: state.dim(),
            vertices: vec![state],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DensityMatrix] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn mix(&self, weights: &[f64]) -> Result<DensityMatrix> {
        let refs: Vec<&DensityMatrix> = self.vertices.iter().collect();
        DensityMatrix::mix(&refs, weights)
    }
}

/// A finite list of POVMs the tester may choose from.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMenu {
    dim: usize,
    povms: Vec<Povm>,
}

impl MeasurementMenu {
    pub fn new(povms: Vec<Povm>) -> Result<Self> {
        let dim = povms
            .first()
            .ok_or_else(|| Error::InvalidMeasurement("a menu needs at least one POVM".into()))?
            .dim();
        if let Some(i) = povms.iter().position(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "menu element {i} acts on dimension {}, expected {dim}",
                povms[i].dim()
            )));
        }
        Ok(MeasurementMenu { dim, povms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn povms(&self) -> &[Povm] {
        &self.povms
    }

    pub fn len(&self) -> usize {
        self.povms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.povms.is_empty()
    }
}

/// Tensor-factor dimensions of a composite system, listed left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteStructure {
    dims: Vec<usize>,
}

impl BipartiteStructure {
    /// Two or three factors, each of dimension at least one.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) || dims.contains(&0) {
            return Err(Error::InvalidStructure(format!(
                "expected two or three positive factor dimensions, got {dims:?}"
            )));
        }
        Ok(BipartiteStructure { dims })
    }

    pub fn bipartite(d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(vec![d_a, d_b])
    }

    pub fn tripartite(d_a: usize, d_b: usize, d_c: usize) -> Result<Self> {
        Self::new(vec![d_a, d_b, d_c])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::InvalidStructure(format!(
                "factor dimensions {:?} multiply to {}, but the state has dimension {dim}",
                self.dims,
                self.total()
            )));
        }
        Ok(())
    }
}
