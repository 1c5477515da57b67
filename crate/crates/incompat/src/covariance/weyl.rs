//! Discrete Weyl representation on `C^d` and the position/momentum pair.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::compat::{report, run, AffineSet, FeasibilityReport, SolverConfig};
use crate::devices::{
    check_distribution, check_state, ChannelChoi, Instrument, JointObservable, Mix, Povm,
};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, CMatrix};

/// `e^{2πi k/d}`
pub fn root_of_unity(d: usize, k: i64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k.rem_euclid(d as i64) as f64 / d as f64)
}

/// `(a − b) mod d` for indices already in `0..d`.
#[inline]
pub(crate) fn sub_mod(a: usize, b: usize, d: usize) -> usize {
    (a + d - b % d) % d
}

/// Shifts `U_q|n⟩ = |n+q⟩`, phases `V_p|n⟩ = e^{2πinp/d}|n⟩` and
/// `W_{q,p} = U_q V_p`.
#[derive(Clone, Debug)]
pub struct WeylRep {
    d: usize,
    u: Vec<CMatrix>,
    v: Vec<CMatrix>,
    w: Vec<CMatrix>,
}

pub fn weyl_rep(d: usize) -> Result<WeylRep> {
    WeylRep::new(d)
}

impl WeylRep {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(format!(
                "Weyl representation needs d ≥ 2, got {d}"
            )));
        }
        let u: Vec<CMatrix> = (0..d)
            .map(|q| {
                CMatrix::from_fn(d, |i, j| {
                    if i == (j + q) % d {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        let v: Vec<CMatrix> = (0..d)
            .map(|p| {
                CMatrix::diag(
                    &(0..d)
                        .map(|n| root_of_unity(d, (n * p) as i64))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let w = (0..d * d).map(|i| u[i / d].matmul(&v[i % d])).collect();
        Ok(Self { d, u, v, w })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn u(&self, q: usize) -> &CMatrix {
        &self.u[q % self.d]
    }

    pub fn v(&self, p: usize) -> &CMatrix {
        &self.v[p % self.d]
    }

    pub fn w(&self, q: usize, p: usize) -> &CMatrix {
        &self.w[(q % self.d) * self.d + p % self.d]
    }

    /// Computational basis vector `φ_j`.
    pub fn phi(&self, j: usize) -> Vec<C64> {
        crate::devices::basis_vector(self.d, j % self.d)
    }

    /// Fourier basis vector `ψ_k = Σ_n e^{2πink/d}/√d |n⟩`.
    pub fn psi(&self, k: usize) -> Vec<C64> {
        let s = 1.0 / (self.d as f64).sqrt();
        (0..self.d)
            .map(|n| root_of_unity(self.d, (n * k) as i64) * s)
            .collect()
    }

    /// Sharp position observable `Q_j = |φ_j⟩⟨φ_j|`.
    pub fn position(&self) -> Povm {
        Povm::computational(self.d)
    }

    /// Sharp momentum observable `P_k = |ψ_k⟩⟨ψ_k|`.
    pub fn momentum(&self) -> Povm {
        Povm::from_basis(&(0..self.d).map(|k| self.psi(k)).collect::<Vec<_>>())
            .expect("orthonormal basis")
    }

    /// `F φ_j = d^{-1/2} Σ_i e^{−2πiij/d} φ_i`, so that `F* φ_k = ψ_k`.
    pub fn fourier(&self) -> CMatrix {
        let s = 1.0 / (self.d as f64).sqrt();
        CMatrix::from_fn(self.d, |i, j| root_of_unity(self.d, -((i * j) as i64)) * s)
    }

    /// `Σ_{q,p} W B W*`
    pub fn orbit_sum(&self, b: &CMatrix) -> CMatrix {
        let mut acc = CMatrix::zeros(self.d);
        for w in &self.w {
            acc += &b.conjugate_by(w);
        }
        acc
    }

    fn check_povm(&self, m: &Povm) -> Result<()> {
        if m.dim() != self.d || m.outcomes() != self.d {
            return Err(Error::Dimension(format!(
                "expected a {d}-outcome observable on C^{d}, got {} outcomes on C^{}",
                m.outcomes(),
                m.dim(),
                d = self.d
            )));
        }
        Ok(())
    }
}

/// `(μ*X)_j = Σ_q μ_{j−q} X_q`
pub fn convolve(mu: &[f64], x: &Povm) -> Result<Povm> {
    let d = x.outcomes();
    if mu.len() != d {
        return Err(Error::Dimension(format!(
            "distribution of length {} vs {d} outcomes",
            mu.len()
        )));
    }
    check_distribution(mu)?;
    let effects = (0..d)
        .map(|j| {
            let mut acc = CMatrix::zeros(x.dim());
            for q in 0..d {
                acc.axpy(mu[sub_mod(j, q, d)], x.effect(q));
            }
            acc
        })
        .collect();
    Povm::new(effects)
}

/// The Weyl-covariant pair `(μ*Q, ν*P)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariantObsPair {
    pub d: usize,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl CovariantObsPair {
    pub fn new(mu: Vec<f64>, nu: Vec<f64>) -> Result<Self> {
        if mu.len() != nu.len() || mu.len() < 2 {
            return Err(Error::Dimension(format!(
                "distributions of lengths {} and {}",
                mu.len(),
                nu.len()
            )));
        }
        check_distribution(&mu)?;
        check_distribution(&nu)?;
        Ok(Self {
            d: mu.len(),
            mu,
            nu,
        })
    }

    /// `μ = ν = δ₀`, i.e. `(Q, P)` itself.
    pub fn sharp(d: usize) -> Result<Self> {
        let mut delta = vec![0.0; d];
        if d > 0 {
            delta[0] = 1.0;
        }
        Self::new(delta.clone(), delta)
    }

    /// Noise with `μ₀ = ν₀ = 0` and `μ_j = ν_j = 1/(d−1)` otherwise.
    pub fn weyl_noise(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(format!("need d ≥ 2, got {d}")));
        }
        let mut mu = vec![1.0 / (d - 1) as f64; d];
        mu[0] = 0.0;
        Self::new(mu.clone(), mu)
    }

    pub fn observables(&self, rep: &WeylRep) -> Result<(Povm, Povm)> {
        if rep.dim() != self.d {
            return Err(Error::Dimension("representation dimension mismatch".into()));
        }
        Ok((
            convolve(&self.mu, &rep.position())?,
            convolve(&self.nu, &rep.momentum())?,
        ))
    }
}

impl Mix for CovariantObsPair {
    fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::Dimension(format!(
                "pairs on C^{} and C^{}",
                self.d, other.d
            )));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::WeightOutOfRange(t));
        }
        let lin = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| t * x + (1.0 - t) * y)
                .collect()
        };
        Self::new(lin(&self.mu, &other.mu), lin(&self.nu, &other.nu))
    }
}

/// `M^W_j = d^{-2} Σ W M_{j−q} W*`, `N^W_k = d^{-2} Σ W N_{k−p} W*`.
pub fn covariantize_obs_pair(m: &Povm, n: &Povm, rep: &WeylRep) -> Result<(Povm, Povm)> {
    rep.check_povm(m)?;
    rep.check_povm(n)?;
    let d = rep.dim();
    let norm = 1.0 / (d * d) as f64;
    let average = |x: &Povm, first: bool| -> Vec<CMatrix> {
        (0..d)
            .map(|j| {
                let mut acc = CMatrix::zeros(d);
                for q in 0..d {
                    for p in 0..d {
                        let shift = if first { q } else { p };
                        acc.axpy(
                            norm,
                            &x.effect(sub_mod(j, shift, d)).conjugate_by(rep.w(q, p)),
                        );
                    }
                }
                acc
            })
            .collect()
    };
    Ok((
        Povm::new_unchecked(average(m, true))?,
        Povm::new_unchecked(average(n, false))?,
    ))
}

/// `G^W_{jk} = d^{-2} Σ W G_{j−q,k−p} W*`
pub fn covariantize_joint(g: &JointObservable, rep: &WeylRep) -> Result<JointObservable> {
    let d = rep.dim();
    if g.dim() != d || g.rows() != d || g.cols() != d {
        return Err(Error::Dimension(
            "joint observable must be d×d-outcome on C^d".into(),
        ));
    }
    let norm = 1.0 / (d * d) as f64;
    let blocks = (0..d * d)
        .map(|i| {
            let (j, k) = (i / d, i % d);
            let mut acc = CMatrix::zeros(d);
            for q in 0..d {
                for p in 0..d {
                    acc.axpy(
                        norm,
                        &g.block(sub_mod(j, q, d), sub_mod(k, p, d))
                            .conjugate_by(rep.w(q, p)),
                    );
                }
            }
            acc
        })
        .collect();
    JointObservable::new_unchecked(d, d, blocks)
}

/// `E^W(ρ) = d^{-2} Σ W E(W*ρW) W*`
pub fn covariantize_channel(e: &ChannelChoi, rep: &WeylRep) -> Result<ChannelChoi> {
    let d = rep.dim();
    if e.din() != d || e.dout() != d {
        return Err(Error::Dimension("channel must act on C^d".into()));
    }
    let norm = 1.0 / (d * d) as f64;
    ChannelChoi::from_map(d, d, |x| {
        let mut acc = CMatrix::zeros(d);
        for w in &rep.w {
            acc.axpy(
                norm,
                &e.apply(&x.conjugate_by(&w.adjoint())).conjugate_by(w),
            );
        }
        acc
    })
}

/// `Γ^W_j(ρ) = d^{-2} Σ W Γ_{j−q}(W*ρW) W*`; the observable marginal picks up
/// the position-type covariance, the channel marginal is Weyl-twirled.
pub fn covariantize_instrument(g: &Instrument, rep: &WeylRep) -> Result<Instrument> {
    let d = rep.dim();
    if g.din() != d || g.dout() != d || g.outcomes() != d {
        return Err(Error::Dimension(
            "instrument must be d-outcome on C^d".into(),
        ));
    }
    let norm = 1.0 / (d * d) as f64;
    let blocks = (0..d)
        .map(|j| {
            crate::devices::choi_from_map(d, d, |x| {
                let mut acc = CMatrix::zeros(d);
                for q in 0..d {
                    for p in 0..d {
                        let w = rep.w(q, p);
                        acc.axpy(
                            norm,
                            &g.apply(sub_mod(j, q, d), &x.conjugate_by(&w.adjoint()))
                                .conjugate_by(w),
                        );
                    }
                }
                acc
            })
        })
        .collect();
    Instrument::new(d, d, blocks)
}

/// `G_{jk} = d^{-1} W_{j,k} ρ W_{j,k}*`; its marginals are `(μ*Q, ν*P)` with
/// `μ_{−n} = ⟨φ_n|ρ|φ_n⟩` and `ν_{−n} = ⟨ψ_n|ρ|ψ_n⟩`.
pub fn joint_from_state(rho: &CMatrix, rep: &WeylRep) -> Result<JointObservable> {
    let d = rep.dim();
    if rho.dim() != d {
        return Err(Error::Dimension("state dimension mismatch".into()));
    }
    check_state(rho)?;
    let blocks = (0..d * d)
        .map(|i| rho.conjugate_by(rep.w(i / d, i % d)).scale(1.0 / d as f64))
        .collect();
    JointObservable::new(d, d, blocks)
}

/// Distributions `(μ, ν)` realised by [`joint_from_state`].
pub fn state_distributions(rho: &CMatrix, rep: &WeylRep) -> (Vec<f64>, Vec<f64>) {
    let d = rep.dim();
    let expect = |v: &[C64]| {
        rho.apply(v)
            .iter()
            .zip(v)
            .map(|(a, b)| (b.conj() * a).re)
            .sum::<f64>()
    };
    let mu = (0..d).map(|j| expect(&rep.phi(sub_mod(0, j, d)))).collect();
    let nu = (0..d).map(|k| expect(&rep.psi(sub_mod(0, k, d)))).collect();
    (mu, nu)
}

/// `c²|φ₀+ψ₀⟩⟨φ₀+ψ₀|` with `c² = √d/(2(√d+1))`, the state behind the optimal
/// mixture of `(Q, P)` with [`CovariantObsPair::weyl_noise`].
pub fn weyl_witness_state(d: usize) -> Result<CMatrix> {
    let rep = WeylRep::new(d)?;
    let eta = weyl_witness_dilation(d, &rep.phi(0))?;
    partial_trace(&eta, &[d, d], &[0])
}

/// `|η⟩⟨η|` on `C^d ⊗ C^k` with `η = c(φ₀+ψ₀)⊗ξ`. Only its first reduced
/// state enters the joint observable, so any unit `ξ` gives the same witness.
pub fn weyl_witness_dilation(d: usize, xi: &[C64]) -> Result<CMatrix> {
    let rep = WeylRep::new(d)?;
    let norm = xi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if xi.is_empty() || (norm - 1.0).abs() > 1e-10 {
        return Err(Error::ConstraintViolation(format!(
            "ξ must be a unit vector, has norm {norm}"
        )));
    }
    let sd = (d as f64).sqrt();
    let c = (sd / (2.0 * (sd + 1.0))).sqrt();
    let v: Vec<C64> = rep
        .phi(0)
        .iter()
        .zip(rep.psi(0))
        .map(|(a, b)| (a + b) * c)
        .collect();
    let eta: Vec<C64> = v
        .iter()
        .flat_map(|a| xi.iter().map(move |x| a * x))
        .collect();
    Ok(CMatrix::projector(&eta))
}

/// Hermitian `ρ` with both basis diagonals prescribed.
struct StateAffine {
    rep: WeylRep,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

impl StateAffine {
    fn diagonals(&self, rho: &CMatrix) -> (Vec<f64>, Vec<f64>) {
        let d = self.rep.dim();
        let f = self.rep.fourier();
        // ⟨ψ_n|ρ|ψ_n⟩ are the diagonal entries of FρF*, since Fψ_n = φ_n
        let rf = rho.conjugate_by(&f);
        (
            (0..d).map(|n| rho[(n, n)].re).collect(),
            (0..d).map(|n| rf[(n, n)].re).collect(),
        )
    }
}

impl AffineSet for StateAffine {
    fn project(&self, x: &mut [CMatrix]) {
        let d = self.rep.dim();
        let rho = &mut x[0];
        *rho = rho.hermitian_part();
        let (dq, dp) = self.diagonals(rho);
        let a: Vec<f64> = (0..d).map(|n| self.mu[n] - dq[n]).collect();
        let shift = a.iter().sum::<f64>() / d as f64;
        let b: Vec<f64> = (0..d).map(|n| self.nu[n] - dp[n] - shift).collect();
        for n in 0..d {
            rho[(n, n)] += C64::new(a[n], 0.0);
            rho.axpy(b[n], &CMatrix::projector(&self.rep.psi(n)));
        }
    }

    fn residual(&self, x: &[CMatrix]) -> f64 {
        let (dq, dp) = self.diagonals(&x[0]);
        let err = |u: &[f64], v: &[f64]| {
            u.iter()
                .zip(v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        err(&dq, &self.mu).max(err(&dp, &self.nu))
    }
}

/// Decides joint measurability of `(μ*Q, ν*P)` by searching for a state with
/// `⟨φ_n|ρ|φ_n⟩ = μ_{−n}` and `⟨ψ_n|ρ|ψ_n⟩ = ν_{−n}`. The witness is that state;
/// [`joint_from_state`] turns it into a joint observable.
pub fn covariant_pair_jm_oracle(
    pair: &CovariantObsPair,
    cfg: &SolverConfig,
) -> Result<FeasibilityReport<CMatrix>> {
    let d = pair.d;
    let rep = WeylRep::new(d)?;
    let reflect = |m: &[f64]| (0..d).map(|n| m[sub_mod(0, n, d)]).collect::<Vec<_>>();
    let aff = StateAffine {
        rep,
        mu: reflect(&pair.mu),
        nu: reflect(&pair.nu),
    };
    let out = run(&aff, vec![CMatrix::identity(d).scale(1.0 / d as f64)], cfg)?;
    Ok(report(out, |mut pts| pts.pop().expect("one block")))
}
