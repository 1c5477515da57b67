//! Observables, channels, instruments and the processings between them.
//!
//! Channel Choi convention: `choi(E) = Σ_{m,n} E(|m⟩⟨n|) ⊗ |m⟩⟨n|`, output
//! factor first. Hence tracing out the output gives the identity for a
//! trace-preserving map, `choi(id) = Ω_d`, and an effect `M` of an operation
//! with Choi `C` is recovered as `(tr_out C)ᵀ`. [`ChannelChoi::to_dual_choi`]
//! converts to the Heisenberg-picture operator `(E*⊗id)(Ω)`, whose first
//! factor is the input space.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_unchecked, kron, omega, partial_trace, permute_factors, CMatrix, ZERO};

static DEVICE_TOL_BITS: AtomicU64 = AtomicU64::new(0x3DDB_7CDF_D9D7_BDBB); // 1e-10

/// Tolerance used by every device validity check.
pub fn device_tol() -> f64 {
    f64::from_bits(DEVICE_TOL_BITS.load(Ordering::Relaxed))
}

/// Overrides the process-wide device tolerance.
pub fn set_device_tol(tol: f64) {
    assert!(
        tol > 0.0 && tol.is_finite(),
        "device tolerance must be positive"
    );
    DEVICE_TOL_BITS.store(tol.to_bits(), Ordering::Relaxed);
}

fn psd_violation(m: &CMatrix) -> f64 {
    let herm = m.hermitian_deviation();
    let low = eig_unchecked(m).eigenvalues[0];
    herm.max(-low)
}

fn check_weight(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::WeightOutOfRange(t))
    }
}

fn combine(a: &CMatrix, b: &CMatrix, t: f64) -> CMatrix {
    let mut out = a.scale(t);
    out.axpy(1.0 - t, b);
    out
}

pub fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= -1e-12)) {
        return Err(Error::InvalidDistribution(format!("entry {x} is negative")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidDistribution(format!("sums to {s}")));
    }
    Ok(())
}

pub fn check_state(rho: &CMatrix) -> Result<()> {
    let v = psd_violation(rho);
    if v > device_tol() {
        return Err(Error::NotAState(format!("PSD violation {v:.3e}")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > device_tol() || tr.im.abs() > device_tol() {
        return Err(Error::NotAState(format!("trace {tr}")));
    }
    Ok(())
}

/// Computational basis vector `|i⟩`.
pub fn basis_vector(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[i] = C64::new(1.0, 0.0);
    v
}

// ---------------------------------------------------------------------------
// Choi-matrix plumbing shared by channels and instrument blocks

/// `E(ρ)_{ab} = Σ_{mn} ρ_{mn} C[(a,m),(b,n)]`
pub(crate) fn choi_apply(choi: &CMatrix, din: usize, dout: usize, rho: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(dout);
    for a in 0..dout {
        for b in 0..dout {
            let mut acc = ZERO;
            for m in 0..din {
                for n in 0..din {
                    acc += rho[(m, n)] * choi[(a * din + m, b * din + n)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Heisenberg picture: `E*(B)_{nm} = Σ_{ab} C[(a,m),(b,n)] B_{ba}`
pub(crate) fn choi_dual_apply(choi: &CMatrix, din: usize, dout: usize, b_op: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(din);
    for m in 0..din {
        for n in 0..din {
            let mut acc = ZERO;
            for a in 0..dout {
                for b in 0..dout {
                    acc += choi[(a * din + m, b * din + n)] * b_op[(b, a)];
                }
            }
            out[(n, m)] = acc;
        }
    }
    out
}

/// Choi matrix of an arbitrary linear map given as a closure.
pub(crate) fn choi_from_map(din: usize, dout: usize, f: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
    let mut choi = CMatrix::zeros(din * dout);
    for m in 0..din {
        for n in 0..din {
            let img = f(&CMatrix::unit(din, m, n));
            assert_eq!(
                img.dim(),
                dout,
                "map produced an operator of the wrong size"
            );
            for a in 0..dout {
                for b in 0..dout {
                    choi[(a * din + m, b * din + n)] = img[(a, b)];
                }
            }
        }
    }
    choi
}

/// `(tr_out C)ᵀ`, i.e. `E*(I)`.
pub(crate) fn choi_effect(choi: &CMatrix, din: usize, dout: usize) -> CMatrix {
    partial_trace(choi, &[dout, din], &[1])
        .expect("consistent dims")
        .transpose()
}

// ---------------------------------------------------------------------------

/// Finite-outcome observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmRepr", into = "PovmRepr")]
pub struct Povm {
    effects: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct PovmRepr {
    dim: usize,
    effects: Vec<CMatrix>,
}

impl TryFrom<PovmRepr> for Povm {
    type Error = Error;
    fn try_from(r: PovmRepr) -> Result<Self> {
        if r.effects.iter().any(|e| e.dim() != r.dim) {
            return Err(Error::Dimension(format!(
                "effects do not match dim {}",
                r.dim
            )));
        }
        Povm::new(r.effects)
    }
}

impl From<Povm> for PovmRepr {
    fn from(p: Povm) -> Self {
        PovmRepr {
            dim: p.dim(),
            effects: p.effects,
        }
    }
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let p = Self::new_unchecked(effects)?;
        p.validate(device_tol())?;
        Ok(p)
    }

    /// Shape checks only; positivity and normalisation are left to the caller.
    pub fn new_unchecked(effects: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidPovm("no effects".into()));
        };
        let d = first.dim();
        if effects.iter().any(|e| e.dim() != d) {
            return Err(Error::Dimension("effects of different sizes".into()));
        }
        Ok(Self { effects })
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d);
        for (j, e) in self.effects.iter().enumerate() {
            let v = psd_violation(e);
            if v > tol {
                return Err(Error::InvalidPovm(format!(
                    "effect {j} violates positivity by {v:.3e}"
                )));
            }
            sum += e;
        }
        let dev = sum.max_abs_diff(&CMatrix::identity(d));
        if dev > tol {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {dev:.3e}"
            )));
        }
        Ok(())
    }

    /// Rank-one projections onto the given orthonormal vectors.
    pub fn from_basis(vectors: &[Vec<C64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| CMatrix::projector(v)).collect())
    }

    /// The sharp observable of the computational basis.
    pub fn computational(d: usize) -> Self {
        Self {
            effects: (0..d).map(|j| CMatrix::unit(d, j, j)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn effect(&self, j: usize) -> &CMatrix {
        &self.effects[j]
    }

    pub fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.effects
            .iter()
            .map(|e| e.matmul(rho).trace().re)
            .collect()
    }

    pub fn pre_process(&self, e: &ChannelChoi) -> Result<Povm> {
        pre_process_observable(self, e)
    }

    pub fn post_process(&self, beta: &MarkovKernel) -> Result<Povm> {
        post_process_observable(self, beta)
    }

    /// `t·self + (1−t)·other` for any real `t`, validated.
    pub fn affine_combination(&self, other: &Povm, t: f64) -> Result<Povm> {
        self.same_shape(other)?;
        Povm::new(
            self.effects
                .iter()
                .zip(&other.effects)
                .map(|(a, b)| combine(a, b, t))
                .collect(),
        )
    }

    fn same_shape(&self, other: &Povm) -> Result<()> {
        if self.dim() != other.dim() || self.outcomes() != other.outcomes() {
            return Err(Error::Dimension(format!(
                "POVM shapes differ: {}x{} vs {}x{}",
                self.outcomes(),
                self.dim(),
                other.outcomes(),
                other.dim()
            )));
        }
        Ok(())
    }
}

/// Every effect a multiple of the identity: `T_j = p_j I`.
pub fn trivial_observable(p: &[f64], d: usize) -> Result<Povm> {
    check_distribution(p)?;
    Ok(Povm {
        effects: p.iter().map(|&pj| CMatrix::identity(d).scale(pj)).collect(),
    })
}

pub fn uniform_trivial_observable(d: usize) -> Povm {
    trivial_observable(&vec![1.0 / d as f64; d], d).expect("uniform distribution")
}

/// `N_j = E*(M_j)`
pub fn pre_process_observable(m: &Povm, e: &ChannelChoi) -> Result<Povm> {
    if e.dout != m.dim() {
        return Err(Error::Dimension(format!(
            "channel output {} vs POVM dim {}",
            e.dout,
            m.dim()
        )));
    }
    Ok(Povm {
        effects: m.effects.iter().map(|x| e.dual_apply(x)).collect(),
    })
}

/// `N_y = Σ_ω β[y,ω] M_ω`
pub fn post_process_observable(m: &Povm, beta: &MarkovKernel) -> Result<Povm> {
    if beta.inputs() != m.outcomes() {
        return Err(Error::Dimension(format!(
            "kernel expects {} outcomes, POVM has {}",
            beta.inputs(),
            m.outcomes()
        )));
    }
    let d = m.dim();
    let effects = (0..beta.outputs())
        .map(|y| {
            let mut acc = CMatrix::zeros(d);
            for (w, e) in m.effects.iter().enumerate() {
                acc.axpy(beta.get(y, w), e);
            }
            acc
        })
        .collect();
    Ok(Povm { effects })
}

// ---------------------------------------------------------------------------

/// Completely positive trace-preserving map in the output-first Choi form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct ChannelChoi {
    din: usize,
    dout: usize,
    choi: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    din: usize,
    dout: usize,
    choi: CMatrix,
}

impl TryFrom<ChannelRepr> for ChannelChoi {
    type Error = Error;
    fn try_from(r: ChannelRepr) -> Result<Self> {
        ChannelChoi::new(r.din, r.dout, r.choi)
    }
}

impl From<ChannelChoi> for ChannelRepr {
    fn from(c: ChannelChoi) -> Self {
        ChannelRepr {
            din: c.din,
            dout: c.dout,
            choi: c.choi,
        }
    }
}

impl ChannelChoi {
    pub fn new(din: usize, dout: usize, choi: CMatrix) -> Result<Self> {
        let c = Self::new_unchecked(din, dout, choi)?;
        c.validate(device_tol())?;
        Ok(c)
    }

    pub fn new_unchecked(din: usize, dout: usize, choi: CMatrix) -> Result<Self> {
        if din == 0 || dout == 0 || choi.dim() != din * dout {
            return Err(Error::Dimension(format!(
                "Choi of size {} does not match din={din}, dout={dout}",
                choi.dim()
            )));
        }
        Ok(Self { din, dout, choi })
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let v = psd_violation(&self.choi);
        if v > tol {
            return Err(Error::InvalidChannel(format!(
                "Choi violates positivity by {v:.3e}"
            )));
        }
        let tp = partial_trace(&self.choi, &[self.dout, self.din], &[1])?;
        let dev = tp.max_abs_diff(&CMatrix::identity(self.din));
        if dev > tol {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (deviation {dev:.3e})"
            )));
        }
        Ok(())
    }

    pub fn from_map(din: usize, dout: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Result<Self> {
        Self::new(din, dout, choi_from_map(din, dout, f))
    }

    /// `ρ ↦ Σ_i K_i ρ K_i†` for square Kraus operators.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let d = kraus
            .first()
            .map(CMatrix::dim)
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        Self::from_map(d, d, |x| {
            let mut acc = CMatrix::zeros(d);
            for k in kraus {
                acc += &x.conjugate_by(k);
            }
            acc
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            din: d,
            dout: d,
            choi: omega(d),
        }
    }

    /// `ρ ↦ UρU†`
    pub fn unitary(u: &CMatrix) -> Result<Self> {
        let d = u.dim();
        let dev = u.adjoint().matmul(u).max_abs_diff(&CMatrix::identity(d));
        if dev > device_tol() {
            return Err(Error::InvalidChannel(format!(
                "not unitary (deviation {dev:.3e})"
            )));
        }
        let vec_u: Vec<C64> = (0..d * d).map(|i| u[(i / d, i % d)]).collect();
        Ok(Self {
            din: d,
            dout: d,
            choi: CMatrix::projector(&vec_u),
        })
    }

    /// The completely depolarising channel `ρ ↦ tr(ρ) I/d`.
    pub fn depolarizing(d: usize) -> Self {
        Self {
            din: d,
            dout: d,
            choi: CMatrix::identity(d * d).scale(1.0 / d as f64),
        }
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        choi_apply(&self.choi, self.din, self.dout, rho)
    }

    pub fn dual_apply(&self, b: &CMatrix) -> CMatrix {
        choi_dual_apply(&self.choi, self.din, self.dout, b)
    }

    /// The operator `(E*⊗id)(Ω_{dout})` on `H_in ⊗ H_out`.
    pub fn to_dual_choi(&self) -> CMatrix {
        let t = self.choi.transpose();
        permute_factors(&t, &[self.dout, self.din], &[1, 0]).expect("consistent dims")
    }

    pub fn from_dual_choi(din: usize, dout: usize, m: &CMatrix) -> Result<Self> {
        if m.dim() != din * dout {
            return Err(Error::Dimension(format!(
                "dual Choi of size {} vs {din}x{dout}",
                m.dim()
            )));
        }
        let c = permute_factors(m, &[din, dout], &[1, 0])?.transpose();
        Self::new(din, dout, c)
    }

    pub fn compose(&self, g: &ChannelChoi) -> Result<ChannelChoi> {
        compose_channels(self, g)
    }

    /// `t·self + (1−t)·other` for any real `t`, validated.
    pub fn affine_combination(&self, other: &ChannelChoi, t: f64) -> Result<ChannelChoi> {
        self.same_shape(other)?;
        ChannelChoi::new(self.din, self.dout, combine(&self.choi, &other.choi, t))
    }

    /// `A ⊗ B : L(H_a ⊗ H_b) → L(K_a ⊗ K_b)`
    pub fn tensor(&self, other: &ChannelChoi) -> ChannelChoi {
        let prod = kron(&self.choi, &other.choi);
        let choi = permute_factors(
            &prod,
            &[self.dout, self.din, other.dout, other.din],
            &[0, 2, 1, 3],
        )
        .expect("consistent dims");
        ChannelChoi {
            din: self.din * other.din,
            dout: self.dout * other.dout,
            choi,
        }
    }

    fn same_shape(&self, other: &ChannelChoi) -> Result<()> {
        if self.din != other.din || self.dout != other.dout {
            return Err(Error::Dimension(format!(
                "channel shapes differ: {}→{} vs {}→{}",
                self.din, self.dout, other.din, other.dout
            )));
        }
        Ok(())
    }
}

/// `ρ ↦ σ` for every state.
pub fn constant_channel(sigma: &CMatrix, din: usize) -> Result<ChannelChoi> {
    check_state(sigma)?;
    Ok(ChannelChoi {
        din,
        dout: sigma.dim(),
        choi: kron(sigma, &CMatrix::identity(din)),
    })
}

/// `ρ ↦ Σ_j √A_j ρ √A_j`
pub fn lueders_channel(a: &Povm) -> Result<ChannelChoi> {
    a.validate(device_tol())
        .map_err(|e| Error::InvalidPovm(e.to_string()))?;
    let roots: Vec<CMatrix> = a
        .effects
        .iter()
        .map(|e| e.sqrt_psd())
        .collect::<Result<_>>()?;
    ChannelChoi::from_kraus(&roots)
}

/// Choi of `f ∘ g`.
pub fn compose_channels(f: &ChannelChoi, g: &ChannelChoi) -> Result<ChannelChoi> {
    if g.dout != f.din {
        return Err(Error::Dimension(format!(
            "cannot compose: g outputs {}, f expects {}",
            g.dout, f.din
        )));
    }
    let choi = choi_from_map(g.din, f.dout, |x| f.apply(&g.apply(x)));
    Ok(ChannelChoi {
        din: g.din,
        dout: f.dout,
        choi,
    })
}

/// Output-side partial traces of a channel into `K₁ ⊗ K₂`.
pub fn channel_marginals(
    f: &ChannelChoi,
    split: (usize, usize),
) -> Result<(ChannelChoi, ChannelChoi)> {
    let (k1, k2) = split;
    if k1 * k2 != f.dout {
        return Err(Error::Dimension(format!(
            "{k1}·{k2} does not factor output dim {}",
            f.dout
        )));
    }
    let dims = [k1, k2, f.din];
    let c1 = partial_trace(&f.choi, &dims, &[0, 2])?;
    let c2 = partial_trace(&f.choi, &dims, &[1, 2])?;
    Ok((
        ChannelChoi {
            din: f.din,
            dout: k1,
            choi: c1,
        },
        ChannelChoi {
            din: f.din,
            dout: k2,
            choi: c2,
        },
    ))
}

// ---------------------------------------------------------------------------

/// Outcome-indexed operations whose sum is trace preserving.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstrumentRepr", into = "InstrumentRepr")]
pub struct Instrument {
    din: usize,
    dout: usize,
    blocks: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct InstrumentRepr {
    din: usize,
    dout: usize,
    blocks: Vec<CMatrix>,
}

impl TryFrom<InstrumentRepr> for Instrument {
    type Error = Error;
    fn try_from(r: InstrumentRepr) -> Result<Self> {
        Instrument::new(r.din, r.dout, r.blocks)
    }
}

impl From<Instrument> for InstrumentRepr {
    fn from(i: Instrument) -> Self {
        InstrumentRepr {
            din: i.din,
            dout: i.dout,
            blocks: i.blocks,
        }
    }
}

impl Instrument {
    pub fn new(din: usize, dout: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        let i = Self::new_unchecked(din, dout, blocks)?;
        i.validate(device_tol())?;
        Ok(i)
    }

    pub fn new_unchecked(din: usize, dout: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInstrument("no blocks".into()));
        }
        if blocks.iter().any(|b| b.dim() != din * dout) {
            return Err(Error::Dimension(format!(
                "blocks do not match din={din}, dout={dout}"
            )));
        }
        Ok(Self { din, dout, blocks })
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let mut sum = CMatrix::zeros(self.din * self.dout);
        for (j, b) in self.blocks.iter().enumerate() {
            let v = psd_violation(b);
            if v > tol {
                return Err(Error::InvalidInstrument(format!(
                    "block {j} violates positivity by {v:.3e}"
                )));
            }
            sum += b;
        }
        let tp = partial_trace(&sum, &[self.dout, self.din], &[1])?;
        let dev = tp.max_abs_diff(&CMatrix::identity(self.din));
        if dev > tol {
            return Err(Error::InvalidInstrument(format!(
                "not trace preserving (deviation {dev:.3e})"
            )));
        }
        Ok(())
    }

    /// Builds the instrument from one linear map per outcome.
    pub fn from_maps(
        din: usize,
        dout: usize,
        ops: &[&dyn Fn(&CMatrix) -> CMatrix],
    ) -> Result<Self> {
        Self::new(
            din,
            dout,
            ops.iter().map(|f| choi_from_map(din, dout, f)).collect(),
        )
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn outcomes(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn apply(&self, j: usize, rho: &CMatrix) -> CMatrix {
        choi_apply(&self.blocks[j], self.din, self.dout, rho)
    }

    pub fn marginals(&self) -> Result<(Povm, ChannelChoi)> {
        instrument_marginals(self)
    }

    /// `Γ_j ∘ G`
    pub fn pre_compose(&self, g: &ChannelChoi) -> Result<Instrument> {
        if g.dout != self.din {
            return Err(Error::Dimension(
                "pre-processing channel output mismatch".into(),
            ));
        }
        let blocks = (0..self.outcomes())
            .map(|j| choi_from_map(g.din, self.dout, |x| self.apply(j, &g.apply(x))))
            .collect();
        Ok(Instrument {
            din: g.din,
            dout: self.dout,
            blocks,
        })
    }

    /// `C ∘ Γ_j`
    pub fn post_compose(&self, c: &ChannelChoi) -> Result<Instrument> {
        if c.din != self.dout {
            return Err(Error::Dimension(
                "post-processing channel input mismatch".into(),
            ));
        }
        let blocks = (0..self.outcomes())
            .map(|j| choi_from_map(self.din, c.dout, |x| c.apply(&self.apply(j, x))))
            .collect();
        Ok(Instrument {
            din: self.din,
            dout: c.dout,
            blocks,
        })
    }

    /// `Γ'_y = Σ_j β[y,j] Γ_j`
    pub fn post_process(&self, beta: &MarkovKernel) -> Result<Instrument> {
        if beta.inputs() != self.outcomes() {
            return Err(Error::Dimension(
                "kernel/instrument outcome mismatch".into(),
            ));
        }
        let blocks = (0..beta.outputs())
            .map(|y| {
                let mut acc = CMatrix::zeros(self.din * self.dout);
                for (j, b) in self.blocks.iter().enumerate() {
                    acc.axpy(beta.get(y, j), b);
                }
                acc
            })
            .collect();
        Ok(Instrument {
            din: self.din,
            dout: self.dout,
            blocks,
        })
    }
}

/// Observable marginal `Γ_j*(I)` and channel marginal `Σ_j Γ_j`.
pub fn instrument_marginals(g: &Instrument) -> Result<(Povm, ChannelChoi)> {
    g.validate(device_tol())
        .map_err(|e| Error::InvalidInstrument(e.to_string()))?;
    Ok(instrument_marginals_unchecked(g))
}

pub(crate) fn instrument_marginals_unchecked(g: &Instrument) -> (Povm, ChannelChoi) {
    let effects = g
        .blocks
        .iter()
        .map(|b| choi_effect(b, g.din, g.dout))
        .collect();
    let mut sum = CMatrix::zeros(g.din * g.dout);
    for b in &g.blocks {
        sum += b;
    }
    (
        Povm { effects },
        ChannelChoi {
            din: g.din,
            dout: g.dout,
            choi: sum,
        },
    )
}

// ---------------------------------------------------------------------------

/// Column-stochastic matrix: column `ω` is the distribution `β(·, ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovKernel {
    outputs: usize,
    inputs: usize,
    data: Vec<f64>,
}

impl MarkovKernel {
    /// `rows[y][ω] = β(y, ω)`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let outputs = rows.len();
        let inputs = rows.first().map_or(0, Vec::len);
        if outputs == 0 || inputs == 0 || rows.iter().any(|r| r.len() != inputs) {
            return Err(Error::InvalidKernel("ragged or empty matrix".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidKernel("negative entry".into()));
        }
        let k = Self {
            outputs,
            inputs,
            data,
        };
        for w in 0..inputs {
            let s: f64 = (0..outputs).map(|y| k.get(y, w)).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidKernel(format!("column {w} sums to {s}")));
            }
        }
        Ok(k)
    }

    pub fn identity(n: usize) -> Self {
        Self::deterministic(n, n, |w| w)
    }

    /// Outcome `ω` is relabelled as `f(ω)`.
    pub fn deterministic(inputs: usize, outputs: usize, f: impl Fn(usize) -> usize) -> Self {
        let mut data = vec![0.0; inputs * outputs];
        for w in 0..inputs {
            data[f(w) * inputs + w] = 1.0;
        }
        Self {
            outputs,
            inputs,
            data,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, y: usize, w: usize) -> f64 {
        self.data[y * self.inputs + w]
    }
}

// ---------------------------------------------------------------------------

/// Two-outcome-index POVM `G_{j,k}`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointObservable {
    rows: usize,
    cols: usize,
    blocks: Vec<CMatrix>,
}

impl JointObservable {
    pub fn new(rows: usize, cols: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        let g = Self::new_unchecked(rows, cols, blocks)?;
        g.validate(device_tol())?;
        Ok(g)
    }

    pub fn new_unchecked(rows: usize, cols: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if rows == 0 || cols == 0 || blocks.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} blocks for a {rows}x{cols} grid",
                blocks.len()
            )));
        }
        let d = blocks[0].dim();
        if blocks.iter().any(|b| b.dim() != d) {
            return Err(Error::Dimension("blocks of different sizes".into()));
        }
        Ok(Self { rows, cols, blocks })
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        Povm::new_unchecked(self.blocks.clone())?
            .validate(tol)
            .map_err(|e| Error::InvalidJointObservable(e.to_string()))
    }

    /// `G_{jk} = δ_{jk} P_j`
    pub fn diagonal(p: &Povm) -> Self {
        let n = p.outcomes();
        let d = p.dim();
        let blocks = (0..n * n)
            .map(|i| {
                if i / n == i % n {
                    p.effects[i / n].clone()
                } else {
                    CMatrix::zeros(d)
                }
            })
            .collect();
        Self {
            rows: n,
            cols: n,
            blocks,
        }
    }

    /// `G_{jk} = A_j ⊗ B_k`-style product for a trivial second marginal:
    /// `A_j · q_k`.
    pub fn with_trivial(a: &Povm, q: &[f64]) -> Self {
        let blocks = a
            .effects
            .iter()
            .flat_map(|e| q.iter().map(move |&qk| e.scale(qk)))
            .collect();
        Self {
            rows: a.outcomes(),
            cols: q.len(),
            blocks,
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, j: usize, k: usize) -> &CMatrix {
        &self.blocks[j * self.cols + k]
    }

    /// Row and column sums, without validity checks.
    pub fn marginals(&self) -> (Povm, Povm) {
        let d = self.dim();
        let mut a = vec![CMatrix::zeros(d); self.rows];
        let mut b = vec![CMatrix::zeros(d); self.cols];
        for j in 0..self.rows {
            for k in 0..self.cols {
                a[j] += self.block(j, k);
                b[k] += self.block(j, k);
            }
        }
        (Povm { effects: a }, Povm { effects: b })
    }

    pub fn pre_process(&self, e: &ChannelChoi) -> Result<Self> {
        if e.dout != self.dim() {
            return Err(Error::Dimension(
                "channel output does not match joint observable".into(),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            blocks: self.blocks.iter().map(|b| e.dual_apply(b)).collect(),
        })
    }

    /// `G'_{y,y'} = Σ β[y,j] γ[y',k] G_{jk}`
    pub fn post_process(&self, beta: &MarkovKernel, gamma: &MarkovKernel) -> Result<Self> {
        if beta.inputs() != self.rows || gamma.inputs() != self.cols {
            return Err(Error::Dimension(
                "kernel/joint observable outcome mismatch".into(),
            ));
        }
        let d = self.dim();
        let mut blocks = Vec::with_capacity(beta.outputs() * gamma.outputs());
        for y in 0..beta.outputs() {
            for y2 in 0..gamma.outputs() {
                let mut acc = CMatrix::zeros(d);
                for j in 0..self.rows {
                    for k in 0..self.cols {
                        let w = beta.get(y, j) * gamma.get(y2, k);
                        if w != 0.0 {
                            acc.axpy(w, self.block(j, k));
                        }
                    }
                }
                blocks.push(acc);
            }
        }
        Ok(Self {
            rows: beta.outputs(),
            cols: gamma.outputs(),
            blocks,
        })
    }
}

/// Channel into `K₁ ⊗ K₂` together with the split used for its marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointChannel {
    pub k1: usize,
    pub k2: usize,
    pub channel: ChannelChoi,
}

impl JointChannel {
    pub fn new(channel: ChannelChoi, k1: usize, k2: usize) -> Result<Self> {
        if k1 * k2 != channel.dout {
            return Err(Error::Dimension(format!(
                "{k1}·{k2} does not factor output dim {}",
                channel.dout
            )));
        }
        Ok(Self { k1, k2, channel })
    }

    pub fn marginals(&self) -> (ChannelChoi, ChannelChoi) {
        channel_marginals(&self.channel, (self.k1, self.k2)).expect("split checked at construction")
    }

    /// `G ↦ F∘G`
    pub fn pre_compose(&self, g: &ChannelChoi) -> Result<Self> {
        Self::new(compose_channels(&self.channel, g)?, self.k1, self.k2)
    }

    /// `(A⊗B)∘F`
    pub fn post_compose(&self, a: &ChannelChoi, b: &ChannelChoi) -> Result<Self> {
        if a.din != self.k1 || b.din != self.k2 {
            return Err(Error::Dimension(
                "post-processing channels do not match the split".into(),
            ));
        }
        Self::new(
            compose_channels(&a.tensor(b), &self.channel)?,
            a.dout,
            b.dout,
        )
    }
}

// ---------------------------------------------------------------------------

/// Convex mixing `t·x + (1−t)·y` with `t ∈ [0, 1]`.
pub trait Mix: Sized {
    fn mix(&self, other: &Self, t: f64) -> Result<Self>;
}

impl Mix for Povm {
    fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        check_weight(t)?;
        self.same_shape(other)?;
        Ok(Povm {
            effects: self
                .effects
                .iter()
                .zip(&other.effects)
                .map(|(a, b)| combine(a, b, t))
                .collect(),
        })
    }
}

impl Mix for ChannelChoi {
    fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        check_weight(t)?;
        self.same_shape(other)?;
        Ok(ChannelChoi {
            din: self.din,
            dout: self.dout,
            choi: combine(&self.choi, &other.choi, t),
        })
    }
}

impl Mix for Instrument {
    fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        check_weight(t)?;
        if self.din != other.din || self.dout != other.dout || self.outcomes() != other.outcomes() {
            return Err(Error::Dimension("instrument shapes differ".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| combine(a, b, t))
            .collect();
        Ok(Instrument {
            din: self.din,
            dout: self.dout,
            blocks,
        })
    }
}

impl<A: Mix, B: Mix> Mix for (A, B) {
    fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        Ok((self.0.mix(&other.0, t)?, self.1.mix(&other.1, t)?))
    }
}

pub fn mix<T: Mix>(x: &T, y: &T, t: f64) -> Result<T> {
    x.mix(y, t)
}

/// A pair of devices whose compatibility is in question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DevicePair {
    /// Two observables; compatibility is joint measurability.
    Jm { first: Povm, second: Povm },
    /// Two channels with a common input.
    Chan {
        first: ChannelChoi,
        second: ChannelChoi,
    },
    /// An observable and a channel, compatible when one instrument has both
    /// as marginals.
    Obschan { first: Povm, second: ChannelChoi },
}

impl DevicePair {
    pub fn kind(&self) -> &'static str {
        match self {
            DevicePair::Jm { .. } => "jm",
            DevicePair::Chan { .. } => "chan",
            DevicePair::Obschan { .. } => "obschan",
        }
    }

    /// Base-space dimension of the shared input.
    pub fn dim(&self) -> usize {
        match self {
            DevicePair::Jm { first, .. } | DevicePair::Obschan { first, .. } => first.dim(),
            DevicePair::Chan { first, .. } => first.din(),
        }
    }
}

impl Mix for DevicePair {
    fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        use DevicePair::*;
        match (self, other) {
            (
                Jm {
                    first: a,
                    second: b,
                },
                Jm {
                    first: c,
                    second: e,
                },
            ) => Ok(Jm {
                first: a.mix(c, t)?,
                second: b.mix(e, t)?,
            }),
            (
                Chan {
                    first: a,
                    second: b,
                },
                Chan {
                    first: c,
                    second: e,
                },
            ) => Ok(Chan {
                first: a.mix(c, t)?,
                second: b.mix(e, t)?,
            }),
            (
                Obschan {
                    first: a,
                    second: b,
                },
                Obschan {
                    first: c,
                    second: e,
                },
            ) => Ok(Obschan {
                first: a.mix(c, t)?,
                second: b.mix(e, t)?,
            }),
            _ => Err(Error::Dimension(format!(
                "cannot mix a {} pair with a {} pair",
                self.kind(),
                other.kind()
            ))),
        }
    }
}
