//! Finite-dimensional quantum states, observables and Kraus channels, plus
//! the ground-truth sequence generator `a(t) = tr[A Tᵗ(ρ)]`.
//!
//! The module also computes the space of conserved quantities and the
//! ergodicity predicates that govern when the delay-embedding rank saturates
//! its dimension bound.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_invariant, Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, max_modulus, numerical_rank, vec_row_major, CMatrix, CVector, RMatrix,
};
use crate::sequences::RealSequence;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_PRESERVING_TOL: f64 = 1e-10;
/// Default relative singular-value threshold for all rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn hermitian_residual(m: &CMatrix) -> f64 {
    max_modulus(&(m - m.adjoint()))
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    d: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = square_dim(&mat, "density matrix")?;
        check_invariant("density matrix Hermitian", hermitian_residual(&mat), HERMITIAN_TOL)?;
        let trace = mat.trace();
        check_invariant("density matrix unit trace", (trace - cx(1.0, 0.0)).norm(), TRACE_TOL)?;
        let min_eig = hermitian_eigenvalues(&mat)[0];
        check_invariant("density matrix positive semidefinite", (-min_eig).max(0.0), PSD_TOL)?;
        Ok(Self { d, mat })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }
}

/// A Hermitian observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    d: usize,
    mat: CMatrix,
}

impl Observable {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = square_dim(&mat, "observable")?;
        check_invariant("observable Hermitian", hermitian_residual(&mat), HERMITIAN_TOL)?;
        Ok(Self { d, mat })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }
}

/// A quantum channel in Kraus form: `T(ρ) = Σ_k K_k ρ K_k†` with
/// `Σ_k K_k† K_k = 𝟙`. Complete positivity is structural.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    d: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("Kraus list must be nonempty".into()));
        }
        let d = square_dim(&kraus[0], "Kraus operator")?;
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator size",
                    expected: d,
                    got: k.nrows().max(k.ncols()),
                });
            }
        }
        let channel = Self { d, kraus };
        check_invariant(
            "channel trace preservation (sum K\u{2020}K = 1)",
            channel.trace_preserving_residual(),
            TRACE_PRESERVING_TOL,
        )?;
        Ok(channel)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Max entry of `|Σ K†K − 𝟙|`.
    pub fn trace_preserving_residual(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.d, self.d);
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        max_modulus(&(sum - CMatrix::identity(self.d, self.d)))
    }

    /// Schrödinger-picture application `ρ ↦ Σ K ρ K†`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d, self.d);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// Heisenberg-picture application `A ↦ Σ K† A K`, implemented directly
    /// from the Kraus operators so that the duality
    /// `tr[A T(ρ)] = tr[T*(A) ρ]` is a testable property, not a definition.
    pub fn apply_heisenberg(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d, self.d);
        for k in &self.kraus {
            out += k.adjoint() * a * k;
        }
        out
    }
}

/// A basis of the space `C` of conserved quantities: Hermitian `H` with
/// `tr[H Tᵗ(ρ)]` independent of `t`.
#[derive(Debug, Clone)]
pub struct ConservedSpace {
    d: usize,
    basis: Vec<CMatrix>,
}

impl ConservedSpace {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Orthonormal (Hilbert-Schmidt) Hermitian basis of `C`.
    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn dim_c(&self) -> usize {
        self.basis.len()
    }
}

fn square_dim(m: &CMatrix, what: &'static str) -> Result<usize> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::InvalidParameter(format!(
            "{what} must be square and nonempty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn require_same_d(a: usize, b: usize, context: &'static str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            context,
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// Generates `a(t) = tr[A Tᵗ(ρ)]` for `t = 0..steps`, applying the channel
/// once per step (no re-exponentiation). Traces of Hermitian pairs are real
/// up to roundoff; the imaginary part is discarded.
pub fn evolve_expectations(
    channel: &KrausChannel,
    rho: &DensityMatrix,
    a: &Observable,
    steps: usize,
) -> Result<RealSequence> {
    require_same_d(channel.d(), rho.d(), "channel vs state")?;
    require_same_d(channel.d(), a.d(), "channel vs observable")?;
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let mut values = Vec::with_capacity(steps);
    let mut state = rho.mat().clone();
    for _ in 0..steps {
        values.push((a.mat() * &state).trace().re);
        state = channel.apply(&state);
    }
    RealSequence::new(values)
}

/// Matrix representation `T̂ = Σ_k K_k ⊗ conj(K_k)` of the channel, acting on
/// row-major vectorized states: `vec(T(ρ)) = T̂ · vec(ρ)`.
pub fn transfer_matrix(channel: &KrausChannel) -> CMatrix {
    let d2 = channel.d() * channel.d();
    let mut out = CMatrix::zeros(d2, d2);
    for k in channel.kraus() {
        out += k.kronecker(&k.conjugate());
    }
    out
}

/// Isometric real coordinates of a Hermitian matrix under the
/// Hilbert-Schmidt inner product: diagonal entries, then `√2·Re`, `√2·Im` of
/// the strictly upper triangle.
fn hermitian_coords(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(sqrt2 * m[(i, j)].re);
            out.push(sqrt2 * m[(i, j)].im);
        }
    }
    out
}

fn hermitian_from_coords(coords: &[f64], d: usize) -> CMatrix {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = cx(coords[i], 0.0);
    }
    let mut idx = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let re = coords[idx] / sqrt2;
            let im = coords[idx + 1] / sqrt2;
            idx += 2;
            m[(i, j)] = cx(re, im);
            m[(j, i)] = cx(re, -im);
        }
    }
    m
}

/// Computes the space of conserved quantities as the orthogonal complement,
/// within the `d²`-dimensional real space of Hermitian matrices, of
/// `span_ℝ{Tᵗ(ρ) − ρ : 1 ≤ t ≤ d²}`. Rank decisions use the relative
/// threshold `tol` times the largest singular value.
pub fn conserved_space(
    channel: &KrausChannel,
    rho: &DensityMatrix,
    tol: f64,
) -> Result<ConservedSpace> {
    require_same_d(channel.d(), rho.d(), "channel vs state")?;
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let d = channel.d();
    let d2 = d * d;
    let mut rows = RMatrix::zeros(d2, d2);
    let mut state = rho.mat().clone();
    for t in 0..d2 {
        state = channel.apply(&state);
        let coords = hermitian_coords(&(&state - rho.mat()));
        for (j, c) in coords.iter().enumerate() {
            rows[(t, j)] = *c;
        }
    }
    let dec = crate::linalg::svd_real(&rows)?;
    let rank = if dec.s[0] <= f64::MIN_POSITIVE {
        0
    } else {
        dec.s.iter().take_while(|&&x| x > tol * dec.s[0]).count()
    };
    // Right singular vectors past the rank are an orthonormal basis of the
    // orthogonal complement of the difference span.
    let basis = (rank..d2)
        .map(|i| {
            let coords: Vec<f64> = dec.v.column(i).iter().map(|z| z.re).collect();
            hermitian_from_coords(&coords, d)
        })
        .collect();
    Ok(ConservedSpace { d, basis })
}

/// Ergodicity of the channel with respect to the given state and observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ErgodicityReport {
    /// The Heisenberg orbit `{T*ᵗ(A)}` spans the full matrix space.
    pub ergodic_wrt_observable: bool,
    /// The Schrödinger orbit `{Tᵗ(ρ)}` spans the full matrix space.
    pub ergodic_wrt_state: bool,
}

/// Tests whether the orbits of `ρ` (Schrödinger) and `A` (Heisenberg) span
/// the entire space of `d×d` matrices. Orbit length is capped at `d²` terms,
/// the degree bound of the transfer matrix's minimal polynomial.
pub fn ergodicity_report(
    channel: &KrausChannel,
    rho: &DensityMatrix,
    a: &Observable,
    tol: f64,
) -> Result<ErgodicityReport> {
    require_same_d(channel.d(), rho.d(), "channel vs state")?;
    require_same_d(channel.d(), a.d(), "channel vs observable")?;
    let d2 = channel.d() * channel.d();

    let orbit_rank = |start: &CMatrix, heisenberg: bool| -> Result<usize> {
        let mut cols = CMatrix::zeros(d2, d2);
        let mut cur = start.clone();
        for t in 0..d2 {
            cols.set_column(t, &vec_row_major(&cur));
            cur = if heisenberg {
                channel.apply_heisenberg(&cur)
            } else {
                channel.apply(&cur)
            };
        }
        Ok(numerical_rank(&crate::linalg::svd(&cols)?.s, tol))
    };

    Ok(ErgodicityReport {
        ergodic_wrt_observable: orbit_rank(a.mat(), true)? == d2,
        ergodic_wrt_state: orbit_rank(rho.mat(), false)? == d2,
    })
}

/// What [`random_instance`] should draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomKind {
    Unitary,
    Channel,
    State,
    Observable,
}

/// A randomly drawn model ingredient.
#[derive(Debug, Clone)]
pub enum RandomInstance {
    Unitary(CMatrix),
    Channel(KrausChannel),
    State(DensityMatrix),
    Observable(Observable),
}

fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        cx(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// QR with the phase fix that makes the R diagonal positive, so the Q factor
/// of a complex Gaussian matrix is Haar distributed.
fn haar_from_gaussian(g: CMatrix) -> CMatrix {
    let cols = g.ncols();
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            cx(1.0, 0.0)
        };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Haar-distributed `d×d` unitary drawn from the given generator.
pub fn random_unitary_from<R: Rng>(d: usize, rng: &mut R) -> Result<CMatrix> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(haar_from_gaussian(complex_gaussian(rng, d, d)))
}

/// Haar-distributed `d×d` unitary, deterministic in the seed.
pub fn random_unitary(d: usize, seed: u64) -> Result<CMatrix> {
    random_unitary_from(d, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Random channel drawn by slicing a Haar random isometry from dimension `d`
/// to `d·kraus_count`.
pub fn random_channel_from<R: Rng>(d: usize, kraus_count: usize, rng: &mut R) -> Result<KrausChannel> {
    if d == 0 || kraus_count == 0 {
        return Err(Error::InvalidParameter(
            "dimension and Kraus count must be positive".into(),
        ));
    }
    let isometry = haar_from_gaussian(complex_gaussian(rng, d * kraus_count, d));
    let kraus = (0..kraus_count)
        .map(|j| isometry.rows(j * d, d).into_owned())
        .collect();
    KrausChannel::new(kraus)
}

/// Random channel with `kraus_count` Kraus operators, deterministic in the seed.
pub fn random_channel(d: usize, kraus_count: usize, seed: u64) -> Result<KrausChannel> {
    random_channel_from(d, kraus_count, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Random density matrix `G G† / tr[G G†]` for complex Gaussian `G`.
pub fn random_state_from<R: Rng>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let g = complex_gaussian(rng, d, d);
    let mut rho = &g * g.adjoint();
    let tr = rho.trace();
    rho /= tr;
    // Symmetrize away the last-ulp Hermiticity drift from the normalization.
    rho = (&rho + rho.adjoint()) * cx(0.5, 0.0);
    DensityMatrix::new(rho)
}

/// Seeded variant of [`random_state_from`].
pub fn random_state(d: usize, seed: u64) -> Result<DensityMatrix> {
    random_state_from(d, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Random observable `(G + G†)/2` for complex Gaussian `G`.
pub fn random_observable_from<R: Rng>(d: usize, rng: &mut R) -> Result<Observable> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let g = complex_gaussian(rng, d, d);
    Observable::new((&g + g.adjoint()) * cx(0.5, 0.0))
}

/// Seeded variant of [`random_observable_from`].
pub fn random_observable(d: usize, seed: u64) -> Result<Observable> {
    random_observable_from(d, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Deterministic random model ingredient; `kraus_count` is only used for
/// `RandomKind::Channel`.
pub fn random_instance(
    kind: RandomKind,
    d: usize,
    kraus_count: usize,
    seed: u64,
) -> Result<RandomInstance> {
    Ok(match kind {
        RandomKind::Unitary => RandomInstance::Unitary(random_unitary(d, seed)?),
        RandomKind::Channel => RandomInstance::Channel(random_channel(d, kraus_count, seed)?),
        RandomKind::State => RandomInstance::State(random_state(d, seed)?),
        RandomKind::Observable => RandomInstance::Observable(random_observable(d, seed)?),
    })
}

/// Wraps a unitary as a single-Kraus channel.
pub fn unitary_channel(u: CMatrix) -> Result<KrausChannel> {
    KrausChannel::new(vec![u])
}

/// Qubit channel that multiplies the off-diagonal element by
/// `e^{-gamma + i·omega}`: phase damping composed with a rotation. Starting
/// from `|+⟩⟨+|` and measuring `σ_x` yields `a(t) = e^{-γt} cos(ωt)`.
pub fn damped_rabi_channel(gamma: f64, omega: f64) -> Result<KrausChannel> {
    if gamma < 0.0 {
        return Err(Error::InvalidParameter("damping rate must be nonnegative".into()));
    }
    let p = 1.0 - (-gamma).exp();
    let u = CMatrix::from_diagonal(&CVector::from_vec(vec![
        cx(1.0, 0.0),
        Complex64::from_polar(1.0, omega),
    ]));
    let p0 = CMatrix::from_diagonal(&CVector::from_vec(vec![cx(1.0, 0.0), cx(0.0, 0.0)]));
    let p1 = CMatrix::from_diagonal(&CVector::from_vec(vec![cx(0.0, 0.0), cx(1.0, 0.0)]));
    KrausChannel::new(vec![
        &u * cx((1.0 - p).sqrt(), 0.0),
        &u * p0 * cx(p.sqrt(), 0.0),
        &u * p1 * cx(p.sqrt(), 0.0),
    ])
}

/// The qubit state `|+⟩⟨+|`.
pub fn plus_state() -> DensityMatrix {
    DensityMatrix::new(CMatrix::from_element(2, 2, cx(0.5, 0.0))).expect("valid state")
}

/// The Pauli `σ_x` observable.
pub fn pauli_x() -> Observable {
    Observable::new(CMatrix::from_row_slice(2, 2, &[
        cx(0.0, 0.0),
        cx(1.0, 0.0),
        cx(1.0, 0.0),
        cx(0.0, 0.0),
    ]))
    .expect("valid observable")
}

// ---------------------------------------------------------------------------
// JSON formats: matrices as row-major nested arrays of [re, im] pairs.
// ---------------------------------------------------------------------------

pub(crate) type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub(crate) fn mat_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn mat_from_json(rows: &JsonMatrix, what: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Parse(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{what}: ragged matrix rows")));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        cx(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    d: usize,
    kraus: Vec<JsonMatrix>,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    d: usize,
    rho: JsonMatrix,
}

#[derive(Serialize, Deserialize)]
struct ObservableFile {
    d: usize,
    a: JsonMatrix,
}

impl KrausChannel {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ChannelFile {
            d: self.d,
            kraus: self.kraus.iter().map(mat_to_json).collect(),
        })
        .expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text)?;
        let kraus = file
            .kraus
            .iter()
            .map(|k| mat_from_json(k, "Kraus operator"))
            .collect::<Result<Vec<_>>>()?;
        let channel = Self::new(kraus)?;
        require_same_d(file.d, channel.d(), "channel JSON `d` field")?;
        Ok(channel)
    }
}

impl DensityMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StateFile {
            d: self.d,
            rho: mat_to_json(&self.mat),
        })
        .expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        let rho = Self::new(mat_from_json(&file.rho, "density matrix")?)?;
        require_same_d(file.d, rho.d(), "state JSON `d` field")?;
        Ok(rho)
    }
}

impl Observable {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ObservableFile {
            d: self.d,
            a: mat_to_json(&self.mat),
        })
        .expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ObservableFile = serde_json::from_str(text)?;
        let a = Self::new(mat_from_json(&file.a, "observable")?)?;
        require_same_d(file.d, a.d(), "observable JSON `d` field")?;
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::linalg::eigenvalues;

    fn identity_channel(d: usize) -> KrausChannel {
        KrausChannel::new(vec![CMatrix::identity(d, d)]).unwrap()
    }

    /// Completely depolarizing qubit channel `T(ρ) = 𝟙 tr(ρ)/2`.
    fn depolarizing_qubit() -> KrausChannel {
        let h = cx(0.5, 0.0);
        let paulis = [
            CMatrix::identity(2, 2),
            CMatrix::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(0.0, -1.0), cx(0.0, 1.0), cx(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(-1.0, 0.0)]),
        ];
        KrausChannel::new(paulis.into_iter().map(|p| p * h).collect()).unwrap()
    }

    #[test]
    fn identity_channel_gives_constant_sequence() {
        let rho = random_state(3, 5).unwrap();
        let a = random_observable(3, 6).unwrap();
        let seq = evolve_expectations(&identity_channel(3), &rho, &a, 20).unwrap();
        let expect = (a.mat() * rho.mat()).trace().re;
        for v in seq.values() {
            assert_relative_eq!(*v, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotating_qubit_gives_cosine() {
        // Oracle: matrix powers of U applied directly, independent of the
        // step-by-step channel iteration.
        let u = CMatrix::from_diagonal(&CVector::from_vec(vec![
            cx(1.0, 0.0),
            Complex64::from_polar(1.0, 0.7),
        ]));
        let channel = unitary_channel(u.clone()).unwrap();
        let rho = plus_state();
        let a = pauli_x();
        let seq = evolve_expectations(&channel, &rho, &a, 25).unwrap();
        let mut upow = CMatrix::identity(2, 2);
        for t in 0..25 {
            let evolved = &upow * rho.mat() * upow.adjoint();
            let oracle = (a.mat() * evolved).trace().re;
            assert_relative_eq!(seq.values()[t], oracle, epsilon = 1e-12);
            assert_relative_eq!(seq.values()[t], (0.7 * t as f64).cos(), epsilon = 1e-12);
            upow *= &u;
        }
    }

    #[test]
    fn damped_rabi_sequence_matches_closed_form() {
        let channel = damped_rabi_channel(0.1, 0.7).unwrap();
        let seq = evolve_expectations(&channel, &plus_state(), &pauli_x(), 40).unwrap();
        for (t, v) in seq.values().iter().enumerate() {
            let expect = (-0.1 * t as f64).exp() * (0.7 * t as f64).cos();
            assert_relative_eq!(*v, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn transfer_matrix_of_identity_and_unitary() {
        assert_eq!(transfer_matrix(&identity_channel(2)), CMatrix::identity(4, 4));
        let u = random_unitary(2, 3).unwrap();
        let t = transfer_matrix(&unitary_channel(u.clone()).unwrap());
        assert!(max_modulus(&(&t - u.kronecker(&u.conjugate()))) < 1e-15);
    }

    #[test]
    fn transfer_matrix_acts_as_vectorized_channel() {
        let channel = random_channel(2, 2, 11).unwrap();
        let t_hat = transfer_matrix(&channel);
        for seed in 0..10 {
            let rho = random_state(2, 100 + seed).unwrap();
            let lhs = vec_row_major(&channel.apply(rho.mat()));
            let rhs = &t_hat * vec_row_major(rho.mat());
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn conserved_space_of_identity_is_everything() {
        let rho = random_state(2, 1).unwrap();
        let c = conserved_space(&identity_channel(2), &rho, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(c.dim_c(), 4);
    }

    #[test]
    fn conserved_space_of_random_unitary_d3_is_three() {
        let u = random_unitary(3, 21).unwrap();
        let channel = unitary_channel(u).unwrap();
        let rho = random_state(3, 22).unwrap();
        let c = conserved_space(&channel, &rho, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(c.dim_c(), 3);
        // Every basis element must in fact be conserved along the orbit.
        let mut state = rho.mat().clone();
        for _ in 0..9 {
            state = channel.apply(&state);
            for h in c.basis() {
                let drift = (h * (&state - rho.mat())).trace().norm();
                assert!(drift < 1e-9, "conserved quantity drifts by {drift}");
            }
        }
    }

    #[test]
    fn conserved_space_of_depolarizing_qubit() {
        // T(ρ) = 𝟙/2 for every ρ, so only the direction 𝟙/2 − ρ moves.
        let channel = depolarizing_qubit();
        let rho = random_state(2, 9).unwrap();
        let c = conserved_space(&channel, &rho, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(c.dim_c(), 3);
    }

    #[test]
    fn ergodicity_of_identity_and_unitary_channels() {
        let rho = random_state(2, 31).unwrap();
        let a = random_observable(2, 32).unwrap();
        let rep = ergodicity_report(&identity_channel(2), &rho, &a, DEFAULT_RANK_TOL).unwrap();
        assert!(!rep.ergodic_wrt_observable);
        assert!(!rep.ergodic_wrt_state);

        let u = random_unitary(2, 33).unwrap();
        let rep = ergodicity_report(&unitary_channel(u).unwrap(), &rho, &a, DEFAULT_RANK_TOL).unwrap();
        assert!(!rep.ergodic_wrt_state, "unitary orbits preserve the spectrum");
    }

    #[test]
    fn generic_two_kraus_channel_is_ergodic() {
        let channel = random_channel(2, 2, 41).unwrap();
        let rho = random_state(2, 42).unwrap();
        let a = random_observable(2, 43).unwrap();
        let rep = ergodicity_report(&channel, &rho, &a, DEFAULT_RANK_TOL).unwrap();
        assert!(rep.ergodic_wrt_observable);
        assert!(rep.ergodic_wrt_state);
    }

    #[test]
    fn random_instances_are_deterministic_and_valid() {
        let u1 = random_unitary(3, 42).unwrap();
        let u2 = random_unitary(3, 42).unwrap();
        assert_eq!(u1, u2);
        assert!(max_modulus(&(u1.adjoint() * &u1 - CMatrix::identity(3, 3))) < 1e-12);

        // Constructors validate, so success implies the invariants hold.
        random_state(2, 7).unwrap();
        let ch = random_channel(2, 2, 1).unwrap();
        assert!(ch.trace_preserving_residual() < 1e-12);
    }

    #[test]
    fn channel_preserves_trace_and_positivity() {
        let channel = random_channel(3, 2, 55).unwrap();
        for seed in 0..100 {
            let rho = random_state(3, 1000 + seed).unwrap();
            let out = channel.apply(rho.mat());
            assert!((out.trace() - cx(1.0, 0.0)).norm() < 1e-12);
            assert!(hermitian_eigenvalues(&out)[0] > -1e-10);
        }
    }

    #[test]
    fn heisenberg_schroedinger_duality() {
        for seed in 0..20 {
            let channel = random_channel(3, 2, 200 + seed).unwrap();
            let rho = random_state(3, 300 + seed).unwrap();
            let a = random_observable(3, 400 + seed).unwrap();
            let lhs = (a.mat() * channel.apply(rho.mat())).trace();
            let rhs = (channel.apply_heisenberg(a.mat()) * rho.mat()).trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn transfer_matrix_spectrum_is_contractive_with_fixed_point() {
        for seed in 0..20 {
            let channel = random_channel(2, 2, 500 + seed).unwrap();
            let eigs = eigenvalues(&transfer_matrix(&channel)).unwrap();
            let radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(radius <= 1.0 + 1e-10, "spectral radius {radius}");
            let dist_to_one = eigs.iter().map(|z| (z - cx(1.0, 0.0)).norm()).fold(f64::MAX, f64::min);
            assert!(dist_to_one < 1e-10, "no eigenvalue 1 (closest {dist_to_one})");
        }
    }

    #[test]
    fn json_round_trip_preserves_channel_state_observable() {
        let channel = random_channel(2, 2, 77).unwrap();
        let text = serde_json::to_string(&channel.to_json()).unwrap();
        let back = KrausChannel::from_json_str(&text).unwrap();
        assert_eq!(channel, back);

        let rho = random_state(2, 78).unwrap();
        let back = DensityMatrix::from_json_str(&serde_json::to_string(&rho.to_json()).unwrap()).unwrap();
        assert_eq!(rho, back);

        let a = random_observable(2, 79).unwrap();
        let back = Observable::from_json_str(&serde_json::to_string(&a.to_json()).unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn invalid_inputs_name_the_violated_invariant() {
        // Non-unit trace.
        let err = DensityMatrix::new(CMatrix::identity(2, 2)).unwrap_err();
        assert!(err.to_string().contains("unit trace"), "{err}");
        // Scaled Kraus set is not trace preserving.
        let err = KrausChannel::new(vec![CMatrix::identity(2, 2) * cx(0.5, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("trace preservation"), "{err}");
    }
}
