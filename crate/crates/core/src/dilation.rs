//! The converse direction: embed a contractively realized bounded sequence
//! into an explicit quantum channel, state and observable on a Hilbert space
//! of dimension `r + 2`.
//!
//! Construction, in the block structure `ℂ ⊕ ℂ ⊕ ℂʳ`:
//!
//! ```text
//! C = 1 ⊕ M            |Ψ⟩ = |0 ⊕ R⟩ + |1 ⊕ 0⟩      B = (|1⊕0⟩⟨0⊕L| + h.c.)/2
//! K = 0 ⊕ C            A = (0 ⊕ B)·‖Ψ‖²             ρ = (0 ⊕ |Ψ⟩⟨Ψ|)/‖Ψ‖²
//! ```
//!
//! completed to a trace-preserving channel by the rank-one Kraus operators
//! `√μ_j |e₁⟩⟨f_j|` of the defect `𝟙 − K†K = Σ_j μ_j |f_j⟩⟨f_j|`, which is
//! positive semidefinite exactly because `‖M‖ ≤ 1`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::quantum::{DensityMatrix, KrausChannel, Observable};
use crate::realization::{LinearRealization, CONTRACTION_TOL};
use crate::sequences::RealSequence;

/// Eigenvalues of `𝟙 − K†K` above this negative floor are clipped to zero;
/// anything more negative means the input was not a contraction.
const CLIP_TOL: f64 = 1e-12;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// An explicit quantum model `(T, ρ, A)` of dimension `r + 2` reproducing a
/// realized sequence as `a(t) = tr[A Tᵗ(ρ)]`.
#[derive(Debug, Clone)]
pub struct QuantumRealization {
    dim: usize,
    channel: KrausChannel,
    rho: DensityMatrix,
    a: Observable,
}

impl QuantumRealization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn a(&self) -> &Observable {
        &self.a
    }

    /// Evolves the model and returns `tr[A Tᵗ(ρ)]` for `t = 0..len`.
    pub fn reproduce(&self, len: usize) -> Result<RealSequence> {
        crate::quantum::evolve_expectations(&self.channel, &self.rho, &self.a, len)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "channel": self.channel.to_json(),
            "rho": self.rho.to_json(),
            "a": self.a.to_json(),
        })
    }
}

/// Builds the dimension-`r + 2` quantum model of a contractive realization.
///
/// Fails with [`Error::NotAContraction`] unless `‖M‖ ≤ 1 + 1e-10` (run
/// [`enforce_contraction`](crate::realization::enforce_contraction) first)
/// and with [`Error::NonRealSequence`] if the represented sequence has a
/// nonzero imaginary part, which the symmetrized observable `B` would
/// silently discard.
pub fn quantum_realization(real: &LinearRealization) -> Result<QuantumRealization> {
    let norm = real.contraction_norm();
    if norm > 1.0 + CONTRACTION_TOL {
        return Err(Error::NotAContraction { norm });
    }
    let r = real.r();
    let probe = real.reproduce_complex(2 * r + 2);
    let scale = probe.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let max_imag = probe.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag > 1e-10 * scale {
        return Err(Error::NonRealSequence { max_imag });
    }

    // C = 1 ⊕ M on ℂ ⊕ ℂʳ.
    let mut c = CMatrix::zeros(r + 1, r + 1);
    c[(0, 0)] = cx(1.0, 0.0);
    c.view_mut((1, 1), (r, r)).copy_from(real.m());

    // |Ψ⟩ = (1, R), ‖Ψ‖² = 1 + ‖R‖² exactly from the realization.
    let mut psi = CVector::zeros(r + 1);
    psi[0] = cx(1.0, 0.0);
    psi.rows_mut(1, r).copy_from(real.r_vec());
    let psi_norm_sq = 1.0 + real.r_vec().norm_squared();

    // B = (|1⊕0⟩⟨0⊕L| + h.c.)/2.
    let mut b = CMatrix::zeros(r + 1, r + 1);
    for i in 0..r {
        let li = real.l_vec()[i];
        // ⟨0⊕L| row: conjugated L entries; the h.c. fills the first column.
        b[(0, i + 1)] = li.conj() * cx(0.5, 0.0);
        b[(i + 1, 0)] = li * cx(0.5, 0.0);
    }

    let dim = r + 2;
    let embed = |top: &CMatrix| -> CMatrix {
        let mut out = CMatrix::zeros(dim, dim);
        out.view_mut((1, 1), (r + 1, r + 1)).copy_from(top);
        out
    };

    let k = embed(&c);
    let a_mat = embed(&b) * cx(psi_norm_sq, 0.0);
    let rho_mat = embed(&(&psi * psi.adjoint())) / cx(psi_norm_sq, 0.0);

    // Completion term: 𝟙 − K†K = Σ μ_j |f_j⟩⟨f_j| expanded into rank-one
    // Kraus operators √μ_j |e₁⟩⟨f_j|.
    let defect = CMatrix::identity(dim, dim) - k.adjoint() * &k;
    let eig = crate::linalg::hermitian_eig(&defect)?;
    let mut kraus = vec![k];
    for (j, &mu) in eig.values.iter().enumerate() {
        if mu < -CLIP_TOL {
            return Err(Error::NotAContraction {
                norm: (1.0 - mu).sqrt(),
            });
        }
        if mu <= 0.0 {
            continue;
        }
        let f = eig.vectors.column(j);
        let mut op = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            op[(0, col)] = cx(mu.sqrt(), 0.0) * f[col].conj();
        }
        kraus.push(op);
    }

    Ok(QuantumRealization {
        dim,
        channel: KrausChannel::new(kraus)?,
        rho: DensityMatrix::new(rho_mat)?,
        a: Observable::new(a_mat)?,
    })
}

/// Outcome of the channel validity check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CptpReport {
    /// Max entry of `|Σ K†K − 𝟙|`.
    pub trace_preserving_residual: f64,
    /// Smallest eigenvalue of the Choi matrix
    /// `(𝟙 ⊗ T)(|Ω⟩⟨Ω|)`, `|Ω⟩` the normalized maximally entangled state.
    pub choi_min_eigenvalue: f64,
    pub pass: bool,
}

/// Checks trace preservation and complete positivity of a raw Kraus list;
/// accepts lists that [`KrausChannel::new`] would reject, so deliberately
/// broken inputs can be diagnosed.
pub fn verify_cptp(kraus: &[CMatrix]) -> Result<CptpReport> {
    if kraus.is_empty() {
        return Err(Error::InvalidParameter("Kraus list must be nonempty".into()));
    }
    let d = kraus[0].nrows();
    if d == 0 || kraus.iter().any(|k| k.nrows() != d || k.ncols() != d) {
        return Err(Error::InvalidParameter(
            "Kraus operators must be square with equal dimensions".into(),
        ));
    }
    let mut sum = CMatrix::zeros(d, d);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    let trace_preserving_residual =
        crate::linalg::max_modulus(&(sum - CMatrix::identity(d, d)));

    // Choi = Σ_k w_k w_k† / d with w_k the column-stacked entries of K_k.
    let mut choi = CMatrix::zeros(d * d, d * d);
    for k in kraus {
        let w = CVector::from_fn(d * d, |idx, _| k[(idx % d, idx / d)]);
        choi += &w * w.adjoint();
    }
    choi /= cx(d as f64, 0.0);
    let choi_min_eigenvalue = crate::linalg::hermitian_eigenvalues(&choi)[0];

    Ok(CptpReport {
        trace_preserving_residual,
        choi_min_eigenvalue,
        pass: trace_preserving_residual <= 1e-10 && choi_min_eigenvalue >= -1e-10,
    })
}
