//! Parametrisations of Weyl-covariant observables, channels and instruments,
//! and the Fourier-invariant reduction for the instrument problem.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::weyl::{root_of_unity, sub_mod, WeylRep};
use crate::devices::{choi_from_map, ChannelChoi, Instrument, Povm};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMatrix};

const TOL: f64 = 1e-10;

/// `M_j = U_j C U_j*`; requires `C ≥ 0` with `Σ_j U_j C U_j* = I`.
pub fn covariant_obs_from_c(c: &CMatrix, rep: &WeylRep) -> Result<Povm> {
    if c.dim() != rep.dim() {
        return Err(Error::Dimension("seed operator dimension mismatch".into()));
    }
    let effects = (0..rep.dim()).map(|j| c.conjugate_by(rep.u(j))).collect();
    Povm::new(effects).map_err(|e| Error::ConstraintViolation(format!("seed operator: {e}")))
}

/// Kernel `Φ_{q,p}` of a covariant channel, `E*(W_{q,p}) = Φ_{q,p} W_{q,p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariantChannelKernel {
    pub d: usize,
    /// Row-major in `(q, p)`.
    pub phi: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierPositivity {
    pub pass: bool,
    pub min_re: f64,
    pub max_im: f64,
    /// `Φ̂_{j,k}`, row-major.
    pub hat: Vec<C64>,
}

/// `Φ̂_{j,k} = d⁻¹ Σ_{q,p} e^{−2πiqk/d} e^{2πijp/d} Φ_{q,p}`
pub fn kernel_fourier(phi: &[C64], d: usize) -> Result<Vec<C64>> {
    if phi.len() != d * d {
        return Err(Error::Dimension(format!(
            "kernel of length {} is not {d}×{d}",
            phi.len()
        )));
    }
    let mut hat = vec![C64::new(0.0, 0.0); d * d];
    for j in 0..d {
        for k in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for q in 0..d {
                for p in 0..d {
                    acc += root_of_unity(d, (j * p) as i64 - (q * k) as i64) * phi[q * d + p];
                }
            }
            hat[j * d + k] = acc / d as f64;
        }
    }
    Ok(hat)
}

pub fn kernel_fourier_positivity(phi: &[C64], d: usize) -> Result<FourierPositivity> {
    let hat = kernel_fourier(phi, d)?;
    let min_re = hat.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_im = hat.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(FourierPositivity {
        pass: min_re >= -TOL && max_im <= TOL,
        min_re,
        max_im,
        hat,
    })
}

impl CovariantChannelKernel {
    pub fn new(d: usize, phi: Vec<C64>) -> Result<Self> {
        let check = kernel_fourier_positivity(&phi, d)?;
        if !check.pass {
            return Err(Error::InvalidKernel(format!(
                "Fourier transform not positive (min {:.3e}, max |im| {:.3e})",
                check.min_re, check.max_im
            )));
        }
        if (phi[0] - 1.0).norm() > TOL {
            return Err(Error::InvalidKernel(format!(
                "Φ(0,0) = {} but trace preservation needs 1",
                phi[0]
            )));
        }
        Ok(Self { d, phi })
    }

    pub fn get(&self, q: usize, p: usize) -> C64 {
        self.phi[(q % self.d) * self.d + p % self.d]
    }

    /// `Φ ≡ 1`, the kernel of the identity channel.
    pub fn constant(d: usize) -> Self {
        Self {
            d,
            phi: vec![C64::new(1.0, 0.0); d * d],
        }
    }
}

/// `E(ρ) = d⁻¹ Σ_{j,k} Φ̂_{j,k} W_{j,k}* ρ W_{j,k}`
pub fn covariant_channel_from_kernel(k: &CovariantChannelKernel) -> Result<ChannelChoi> {
    let d = k.d;
    let rep = WeylRep::new(d)?;
    let hat = kernel_fourier(&k.phi, d)?;
    let weights: Vec<f64> = hat.iter().map(|z| z.re / d as f64).collect();
    let choi = choi_from_map(d, d, |x| {
        let mut acc = CMatrix::zeros(d);
        for (i, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                acc.axpy(w, &x.conjugate_by(&rep.w(i / d, i % d).adjoint()));
            }
        }
        acc
    });
    ChannelChoi::new(d, d, choi)
        .map_err(|e| Error::ConstraintViolation(format!("kernel channel: {e}")))
}

/// `Φ_{q,p} = d⁻¹ tr(W_{q,p}* E*(W_{q,p}))`; meaningful for covariant `E`.
pub fn kernel_of_channel(e: &ChannelChoi, rep: &WeylRep) -> Result<CovariantChannelKernel> {
    let d = rep.dim();
    if e.din() != d || e.dout() != d {
        return Err(Error::Dimension("channel must act on C^d".into()));
    }
    let phi = (0..d * d)
        .map(|i| {
            let w = rep.w(i / d, i % d);
            w.hs(&e.dual_apply(w)) / d as f64
        })
        .collect();
    Ok(CovariantChannelKernel { d, phi })
}

/// Blocks `(α^n_{r,s})_{r,s}` defining the operation
/// `D(A)_{r,s} = Σ_n α^n_{r,s} A_{n+r,n+s}` and the instrument
/// `Γ_j(ρ) = U_j D(U_j*ρU_j) U_j*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaInstrument {
    pub d: usize,
    pub alpha: Vec<CMatrix>,
}

impl AlphaInstrument {
    pub fn new(alpha: Vec<CMatrix>) -> Result<Self> {
        let d = alpha.len();
        if d < 2 || alpha.iter().any(|a| a.dim() != d) {
            return Err(Error::Dimension("need d blocks of size d×d".into()));
        }
        for (n, a) in alpha.iter().enumerate() {
            let low = min_eigenvalue(a)
                .map_err(|e| Error::ConstraintViolation(format!("block {n}: {e}")))?;
            if low < -TOL {
                return Err(Error::ConstraintViolation(format!(
                    "block {n} has eigenvalue {low:.3e}"
                )));
            }
        }
        let total: f64 = alpha.iter().map(|a| a.trace().re).sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::ConstraintViolation(format!(
                "diagonal sum {total} ≠ 1"
            )));
        }
        Ok(Self { d, alpha })
    }

    /// Only `α⁰ = a` is non-zero.
    pub fn single_block(a: &CMatrix) -> Result<Self> {
        let d = a.dim();
        let mut alpha = vec![CMatrix::zeros(d); d];
        alpha[0] = a.clone();
        Self::new(alpha)
    }

    /// `α^n_{r,r} = 1/d²`
    pub fn uniform_diagonal(d: usize) -> Result<Self> {
        Self::new(vec![CMatrix::identity(d).scale(1.0 / (d * d) as f64); d])
    }

    fn operation(&self, a: &CMatrix) -> CMatrix {
        let d = self.d;
        CMatrix::from_fn(d, |r, s| {
            (0..d)
                .map(|n| self.alpha[n][(r, s)] * a[((n + r) % d, (n + s) % d)])
                .sum()
        })
    }

    /// The seed operator `C = Σ_{n,r} α^n_{r,r} |n+r⟩⟨n+r|` of the observable
    /// marginal.
    pub fn effect_seed(&self) -> CMatrix {
        let d = self.d;
        let mut diag = vec![0.0; d];
        for n in 0..d {
            for r in 0..d {
                diag[(n + r) % d] += self.alpha[n][(r, r)].re;
            }
        }
        CMatrix::real_diag(&diag)
    }

    /// `Φ_{q,p} = Σ_{n,r} e^{−2πinp/d} α^n_{r−q,r}`, the kernel of the channel
    /// marginal.
    pub fn channel_kernel(&self) -> CovariantChannelKernel {
        let d = self.d;
        let mut phi = vec![C64::new(0.0, 0.0); d * d];
        for q in 0..d {
            for p in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for n in 0..d {
                    let ph = root_of_unity(d, -((n * p) as i64));
                    for r in 0..d {
                        acc += ph * self.alpha[n][(sub_mod(r, q, d), r)];
                    }
                }
                phi[q * d + p] = acc;
            }
        }
        CovariantChannelKernel { d, phi }
    }
}

pub fn instrument_from_alpha(a: &AlphaInstrument) -> Result<Instrument> {
    let d = a.d;
    let rep = WeylRep::new(d)?;
    let blocks = (0..d)
        .map(|j| {
            let u = rep.u(j);
            choi_from_map(d, d, |x| {
                a.operation(&x.conjugate_by(&u.adjoint())).conjugate_by(u)
            })
        })
        .collect();
    Instrument::new(d, d, blocks)
        .map_err(|e| Error::ConstraintViolation(format!("alpha instrument: {e}")))
}

/// `w₁ = Σ_n α^n_{−n,−n}` and `w₂ = d⁻¹ Σ_{r,s} α⁰_{r,s}`.
pub fn w1_w2(a: &AlphaInstrument) -> (f64, f64) {
    let d = a.d;
    let w1 = (0..d)
        .map(|n| a.alpha[n][(sub_mod(0, n, d), sub_mod(0, n, d))].re)
        .sum();
    let w2 = a.alpha[0].as_slice().iter().map(|z| z.re).sum::<f64>() / d as f64;
    (w1, w2)
}

/// `w₀(A) = min(⟨e₀|A|e₀⟩, ⟨f₀|A|f₀⟩)` with `f₀` the uniform superposition;
/// for a single block these are exactly `w₁` and `w₂`.
pub fn w0(a: &CMatrix) -> f64 {
    let d = a.dim();
    let f0 = a.as_slice().iter().map(|z| z.re).sum::<f64>() / d as f64;
    a[(0, 0)].re.min(f0)
}

/// Collapse of an α-family to one block `A = Σ_n U_n α^n U_n*`, which keeps
/// `w₁` and can only raise `w₂`.
#[derive(Clone, Debug)]
pub struct ReducedAlpha {
    pub block: CMatrix,
    pub before: (f64, f64),
    pub after: (f64, f64),
}

pub fn reduce_alpha(a: &AlphaInstrument) -> Result<ReducedAlpha> {
    let rep = WeylRep::new(a.d)?;
    let mut block = CMatrix::zeros(a.d);
    for (n, x) in a.alpha.iter().enumerate() {
        block += &x.conjugate_by(rep.u(n));
    }
    let before = w1_w2(a);
    let after = w1_w2(&AlphaInstrument::single_block(&block)?);
    if (after.0 - before.0).abs() > TOL || after.1 < before.1 - TOL {
        return Err(Error::Oracle(format!(
            "reduction changed (w₁, w₂) from {before:?} to {after:?}"
        )));
    }
    Ok(ReducedAlpha {
        block,
        before,
        after,
    })
}

/// `A^F = ¼ Σ_k F^k A F^{−k}`
pub fn fourier_average(a: &CMatrix) -> Result<CMatrix> {
    let f = WeylRep::new(a.dim())?.fourier();
    let mut acc = CMatrix::zeros(a.dim());
    let mut fk = CMatrix::identity(a.dim());
    for _ in 0..4 {
        acc.axpy(0.25, &a.conjugate_by(&fk));
        fk = f.matmul(&fk);
    }
    Ok(acc)
}

/// `P_k = ¼ Σ_m (−i)^{km} F^m`, the spectral projections of `F`
/// (eigenvalue `i^k`).
pub fn fourier_projections(d: usize) -> Result<[CMatrix; 4]> {
    let f = WeylRep::new(d)?.fourier();
    let powers = [
        CMatrix::identity(d),
        f.clone(),
        f.matmul(&f),
        f.matmul(&f).matmul(&f),
    ];
    let minus_i = C64::new(0.0, -1.0);
    Ok(std::array::from_fn(|k| {
        let mut acc = CMatrix::zeros(d);
        for (m, fm) in powers.iter().enumerate() {
            acc.axpy_c(minus_i.powu((k * m) as u32) * 0.25, fm);
        }
        acc
    }))
}

#[derive(Clone, Debug)]
pub struct FourierOptimum {
    pub value: f64,
    pub a_plus: CMatrix,
    pub a_minus: CMatrix,
    pub value_minus: f64,
}

/// The best Fourier-invariant pure block `A₊ = |v₊⟩⟨v₊|`,
/// `v± = √(√d/(2(√d±1)))(e₀ ± f₀)`, with `w₀(A₊) = ½(1+1/√d)`.
pub fn fourier_invariant_optimum(d: usize) -> Result<FourierOptimum> {
    let rep = WeylRep::new(d)?;
    let sd = (d as f64).sqrt();
    let vec = |sign: f64| -> CMatrix {
        let c = (sd / (2.0 * (sd + sign))).sqrt();
        let v: Vec<C64> = rep
            .phi(0)
            .iter()
            .zip(rep.psi(0))
            .map(|(e, f)| (e + f * sign) * c)
            .collect();
        CMatrix::projector(&v)
    };
    let (a_plus, a_minus) = (vec(1.0), vec(-1.0));
    let f = rep.fourier();
    for a in [&a_plus, &a_minus] {
        if a.conjugate_by(&f).max_abs_diff(a) > TOL {
            return Err(Error::Oracle("candidate is not Fourier invariant".into()));
        }
    }
    let (value, value_minus) = (w0(&a_plus), w0(&a_minus));
    if value_minus >= value {
        return Err(Error::Oracle(format!(
            "w₀(A₋) = {value_minus} does not lose to w₀(A₊) = {value}"
        )));
    }
    Ok(FourierOptimum {
        value,
        a_plus,
        a_minus,
        value_minus,
    })
}
