//! Compatibility deciders for observable pairs, channel pairs and
//! observable–channel pairs.
//!
//! Each problem is a product of PSD cones intersected with an affine set of
//! marginal constraints. We run Dykstra's alternating projections between the
//! two (plain alternating projections are available too) and stop early on
//! either side:
//!
//! * **feasible** once the affine iterate is PSD to within `feas_tol` — that
//!   iterate is returned as the witness;
//! * **infeasible** once a separating hyperplane proves that the two sets are
//!   at least `infeas_threshold` apart. With `c` in the cone and `a = P_A(c)`,
//!   `u = a − c` is orthogonal to the affine directions. Every constraint set
//!   here fixes the total trace `T`, so for `λ ≥ λ_max(u)` the functional
//!   `⟨u − λI, ·⟩` is `≤ 0` on the cone and equals `⟨u, a⟩ − λT` on the affine
//!   set. A positive value divided by `‖u − λI‖` lower-bounds the distance.
//!
//! Anything else after `max_iters` is reported as undecided.

use serde::{Deserialize, Serialize};

use crate::devices::{ChannelChoi, Instrument, JointChannel, JointObservable, Povm};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_unchecked, embed, hermitian_eig_warm, kron, partial_trace, CMatrix, EigDecomposition,
};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dykstra,
    Alternating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub infeas_threshold: f64,
    pub max_iters: usize,
    /// Iterations between feasibility/certificate checks.
    pub check_every: usize,
    pub method: Method,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            infeas_threshold: 1e-4,
            max_iters: 20_000,
            check_every: 10,
            method: Method::Dykstra,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.feas_tol < self.infeas_threshold) {
            return Err(Error::ConstraintViolation(format!(
                "need 0 < feas_tol ({}) < infeas_threshold ({})",
                self.feas_tol, self.infeas_threshold
            )));
        }
        if self.check_every == 0 {
            return Err(Error::ConstraintViolation(
                "check_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityReport<W> {
    pub verdict: Verdict,
    pub witness: Option<W>,
    /// Marginal-constraint violation of the final iterate (max-abs entry),
    /// plus its PSD violation when a witness is returned.
    pub residual: f64,
    pub iterations: usize,
    /// Frobenius distance between the last affine and cone iterates.
    pub gap: f64,
    /// Best proven lower bound on the distance between the two sets.
    pub certified_gap: f64,
}

impl<W> FeasibilityReport<W> {
    pub fn is_feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    pub fn map_witness<V>(self, f: impl FnOnce(W) -> V) -> FeasibilityReport<V> {
        FeasibilityReport {
            verdict: self.verdict,
            witness: self.witness.map(f),
            residual: self.residual,
            iterations: self.iterations,
            gap: self.gap,
            certified_gap: self.certified_gap,
        }
    }
}

/// Orthogonal projection onto an affine set of block-matrix constraints.
pub(crate) trait AffineSet: Sync {
    fn project(&self, x: &mut [CMatrix]);
    fn residual(&self, x: &[CMatrix]) -> f64;
}

pub(crate) struct Outcome {
    pub verdict: Verdict,
    pub point: Vec<CMatrix>,
    pub residual: f64,
    pub iterations: usize,
    pub gap: f64,
    pub certified_gap: f64,
}

struct Block {
    y: CMatrix,
    basis: Option<CMatrix>,
}

fn spectral(m: &CMatrix, basis: &Option<CMatrix>) -> EigDecomposition {
    match basis {
        Some(b) => hermitian_eig_warm(m, b),
        None => eig_unchecked(m),
    }
}

fn frob_dist(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Separating-hyperplane distance bound for cone point `c` and `a = P_A(c)`.
fn certificate(a: &[CMatrix], c: &[CMatrix], bases: &[Block]) -> f64 {
    let u: Vec<CMatrix> = a.iter().zip(c).map(|(x, y)| x - y).collect();
    let tops = par::map_range(u.len(), |i| {
        *spectral(&u[i], &bases[i].basis).eigenvalues.last().unwrap()
    });
    let lambda = tops.into_iter().fold(0.0, f64::max);
    let total_trace: f64 = a.iter().map(|x| x.trace().re).sum();
    let margin = u.iter().zip(a).map(|(x, y)| x.inner(y)).sum::<f64>() - lambda * total_trace;
    if margin <= 0.0 {
        return 0.0;
    }
    let norm2: f64 = u
        .iter()
        .map(|x| {
            let tr = x.trace().re;
            x.frobenius_norm().powi(2) - 2.0 * lambda * tr + lambda * lambda * x.dim() as f64
        })
        .sum();
    margin / norm2.max(f64::MIN_POSITIVE).sqrt()
}

pub(crate) fn run(aff: &dyn AffineSet, init: Vec<CMatrix>, cfg: &SolverConfig) -> Result<Outcome> {
    cfg.validate()?;
    let nb = init.len();
    let mut x = init;
    let mut incr: Vec<CMatrix> = x.iter().map(|b| CMatrix::zeros(b.dim())).collect();
    let mut blocks: Vec<Block> = x
        .iter()
        .map(|b| Block {
            y: b.clone(),
            basis: None,
        })
        .collect();
    let mut best_cert = 0.0f64;
    let mut gap = f64::INFINITY;
    for it in 0..=cfg.max_iters {
        let mut a = x.clone();
        aff.project(&mut a);
        if it % cfg.check_every == 0 || it == cfg.max_iters {
            let lows = par::map_range(nb, |i| spectral(&a[i], &blocks[i].basis).eigenvalues[0]);
            let low = lows.into_iter().fold(f64::INFINITY, f64::min);
            if low >= -cfg.feas_tol {
                let residual = aff.residual(&a).max(-low).max(0.0);
                return Ok(Outcome {
                    verdict: Verdict::Feasible,
                    point: a,
                    residual,
                    iterations: it,
                    gap: if it == 0 { 0.0 } else { gap },
                    certified_gap: 0.0,
                });
            }
            if it > 0 {
                gap = frob_dist(&a, &x);
                // a valid bound never exceeds the current distance; clamp rounding
                best_cert = best_cert.max(certificate(&a, &x, &blocks).min(gap));
                if best_cert >= cfg.infeas_threshold {
                    let residual = aff.residual(&x);
                    return Ok(Outcome {
                        verdict: Verdict::Infeasible,
                        point: x,
                        residual,
                        iterations: it,
                        gap,
                        certified_gap: best_cert,
                    });
                }
            }
        }
        if it == cfg.max_iters {
            break;
        }
        for i in 0..nb {
            blocks[i].y = match cfg.method {
                Method::Dykstra => &a[i] + &incr[i],
                Method::Alternating => a[i].clone(),
            };
        }
        par::for_each_mut(&mut blocks, |_, blk| {
            let e = spectral(&blk.y, &blk.basis);
            let projected = crate::linalg::clip_negative(&blk.y, &e);
            blk.basis = Some(e.eigenvectors);
            blk.y = projected;
        });
        let c: Vec<CMatrix> = blocks.iter().map(|b| b.y.clone()).collect();
        if cfg.method == Method::Dykstra {
            for i in 0..nb {
                incr[i] = &(&a[i] + &incr[i]) - &c[i];
            }
        }
        gap = frob_dist(&a, &c);
        x = c;
    }
    let residual = aff.residual(&x);
    Ok(Outcome {
        verdict: Verdict::Undecided,
        point: x,
        residual,
        iterations: cfg.max_iters,
        gap,
        certified_gap: best_cert,
    })
}

// ---------------------------------------------------------------------------
// Observable pairs

/// Grid `G_{jk}` with row sums `A_j` and column sums `B_k`.
pub(crate) struct JmAffine {
    a: Vec<CMatrix>,
    b: Vec<CMatrix>,
    total: CMatrix,
}

impl JmAffine {
    pub(crate) fn new(a: &Povm, b: &Povm) -> Self {
        let mut total = CMatrix::zeros(a.dim());
        for e in a.effects() {
            total += e;
        }
        Self {
            a: a.effects().to_vec(),
            b: b.effects().to_vec(),
            total,
        }
    }

    fn sums(&self, x: &[CMatrix]) -> (Vec<CMatrix>, Vec<CMatrix>) {
        let (n, m) = (self.a.len(), self.b.len());
        let d = self.total.dim();
        let mut rows = vec![CMatrix::zeros(d); n];
        let mut cols = vec![CMatrix::zeros(d); m];
        for j in 0..n {
            for k in 0..m {
                rows[j] += &x[j * m + k];
                cols[k] += &x[j * m + k];
            }
        }
        (rows, cols)
    }
}

impl AffineSet for JmAffine {
    fn project(&self, x: &mut [CMatrix]) {
        let (n, m) = (self.a.len(), self.b.len());
        let (rows, cols) = self.sums(x);
        let mut total = CMatrix::zeros(self.total.dim());
        for r in &rows {
            total += r;
        }
        let shift = &self.total - &total;
        let row_fix: Vec<CMatrix> = (0..n).map(|j| &self.a[j] - &rows[j]).collect();
        let col_fix: Vec<CMatrix> = (0..m).map(|k| &self.b[k] - &cols[k]).collect();
        for j in 0..n {
            for k in 0..m {
                let g = &mut x[j * m + k];
                g.axpy(1.0 / m as f64, &row_fix[j]);
                g.axpy(1.0 / n as f64, &col_fix[k]);
                g.axpy(-1.0 / (n * m) as f64, &shift);
            }
        }
    }

    fn residual(&self, x: &[CMatrix]) -> f64 {
        let (rows, cols) = self.sums(x);
        let r = rows.iter().zip(&self.a).map(|(u, v)| u.max_abs_diff(v));
        let c = cols.iter().zip(&self.b).map(|(u, v)| u.max_abs_diff(v));
        r.chain(c).fold(0.0, f64::max)
    }
}

/// Searches for a joint observable with marginals `a` and `b`.
pub fn jm_feasible(
    a: &Povm,
    b: &Povm,
    cfg: &SolverConfig,
) -> Result<FeasibilityReport<JointObservable>> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "observables act on dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim() as f64;
    let (n, m) = (a.outcomes(), b.outcomes());
    let init = (0..n * m)
        .map(|i| a.effect(i / m).scale(b.effect(i % m).trace().re / d))
        .collect();
    let out = run(&JmAffine::new(a, b), init, cfg)?;
    Ok(report(out, |pts| {
        JointObservable::new_unchecked(n, m, pts).expect("grid shape")
    }))
}

pub(crate) fn report<W>(
    out: Outcome,
    wrap: impl FnOnce(Vec<CMatrix>) -> W,
) -> FeasibilityReport<W> {
    let witness = (out.verdict == Verdict::Feasible).then(|| wrap(out.point));
    FeasibilityReport {
        verdict: out.verdict,
        witness,
        residual: out.residual,
        iterations: out.iterations,
        gap: out.gap,
        certified_gap: out.certified_gap,
    }
}

// ---------------------------------------------------------------------------
// Channel pairs

/// Joint Choi on `K₁⊗K₂⊗H` whose output partial traces are fixed.
pub(crate) struct ChanAffine {
    dims: [usize; 3],
    x: CMatrix,
    y: CMatrix,
}

impl ChanAffine {
    pub(crate) fn new(e: &ChannelChoi, f: &ChannelChoi) -> Self {
        Self {
            dims: [e.dout(), f.dout(), e.din()],
            x: e.choi().clone(),
            y: f.choi().clone(),
        }
    }
}

impl AffineSet for ChanAffine {
    fn project(&self, m: &mut [CMatrix]) {
        let [k1, k2, din] = self.dims;
        let mm = &mut m[0];
        let t2 = partial_trace(mm, &self.dims, &[0, 2]).expect("dims");
        let t1 = partial_trace(mm, &self.dims, &[1, 2]).expect("dims");
        let lam = (&self.x - &t2).scale(1.0 / k2 as f64);
        let lam_in = partial_trace(&lam, &[k1, din], &[1]).expect("dims");
        let mut mu = &self.y - &t1;
        mu -= &kron(&CMatrix::identity(k2), &lam_in);
        let mu = mu.scale(1.0 / k1 as f64);
        *mm += &embed(&lam, &self.dims, &[0, 2]).expect("dims");
        *mm += &embed(&mu, &self.dims, &[1, 2]).expect("dims");
    }

    fn residual(&self, m: &[CMatrix]) -> f64 {
        let t2 = partial_trace(&m[0], &self.dims, &[0, 2]).expect("dims");
        let t1 = partial_trace(&m[0], &self.dims, &[1, 2]).expect("dims");
        t2.max_abs_diff(&self.x).max(t1.max_abs_diff(&self.y))
    }
}

/// Searches for a channel into `K₁⊗K₂` whose marginals are `e` and `f`.
pub fn channel_compat_feasible(
    e: &ChannelChoi,
    f: &ChannelChoi,
    cfg: &SolverConfig,
) -> Result<FeasibilityReport<JointChannel>> {
    if e.din() != f.din() {
        return Err(Error::Dimension(format!(
            "channels have inputs {} and {}",
            e.din(),
            f.din()
        )));
    }
    let (k1, k2, din) = (e.dout(), f.dout(), e.din());
    let n = k1 * k2 * din;
    let init = vec![CMatrix::identity(n).scale(1.0 / (k1 * k2) as f64)];
    let out = run(&ChanAffine::new(e, f), init, cfg)?;
    Ok(report(out, |mut pts| {
        let ch = ChannelChoi::new_unchecked(din, k1 * k2, pts.remove(0)).expect("shape");
        JointChannel::new(ch, k1, k2).expect("split")
    }))
}

// ---------------------------------------------------------------------------
// Observable–channel pairs

/// Instrument blocks `Γ_j` on `K⊗H` with `Σ_j Γ_j = E` and `tr_K Γ_j = M_jᵀ`.
pub(crate) struct InsAffine {
    k: usize,
    din: usize,
    e: CMatrix,
    mt: Vec<CMatrix>,
}

impl InsAffine {
    pub(crate) fn new(m: &Povm, e: &ChannelChoi) -> Self {
        Self {
            k: e.dout(),
            din: e.din(),
            e: e.choi().clone(),
            mt: m.effects().iter().map(CMatrix::transpose).collect(),
        }
    }
}

impl AffineSet for InsAffine {
    fn project(&self, g: &mut [CMatrix]) {
        let n = g.len();
        let dims = [self.k, self.din];
        let mut sum = CMatrix::zeros(self.e.dim());
        for b in g.iter() {
            sum += b;
        }
        let lam = (&self.e - &sum).scale(1.0 / n as f64);
        let lam_in = partial_trace(&lam, &dims, &[1]).expect("dims");
        let id_k = CMatrix::identity(self.k);
        for (j, b) in g.iter_mut().enumerate() {
            let tk = partial_trace(b, &dims, &[1]).expect("dims");
            let mut mu = &self.mt[j] - &tk;
            mu -= &lam_in;
            let mu = mu.scale(1.0 / self.k as f64);
            *b += &lam;
            *b += &kron(&id_k, &mu);
        }
    }

    fn residual(&self, g: &[CMatrix]) -> f64 {
        let dims = [self.k, self.din];
        let mut sum = CMatrix::zeros(self.e.dim());
        let mut worst: f64 = 0.0;
        for (j, b) in g.iter().enumerate() {
            sum += b;
            worst = worst.max(
                partial_trace(b, &dims, &[1])
                    .expect("dims")
                    .max_abs_diff(&self.mt[j]),
            );
        }
        worst.max(sum.max_abs_diff(&self.e))
    }
}

/// Searches for an instrument with observable marginal `m` and channel
/// marginal `e`.
pub fn obs_channel_feasible(
    m: &Povm,
    e: &ChannelChoi,
    cfg: &SolverConfig,
) -> Result<FeasibilityReport<Instrument>> {
    if m.dim() != e.din() {
        return Err(Error::Dimension(format!(
            "observable dim {} vs channel input {}",
            m.dim(),
            e.din()
        )));
    }
    let d = m.dim() as f64;
    let init = m
        .effects()
        .iter()
        .map(|x| e.choi().scale(x.trace().re / d))
        .collect();
    let out = run(&InsAffine::new(m, e), init, cfg)?;
    let (din, dout) = (e.din(), e.dout());
    Ok(report(out, |pts| {
        Instrument::new_unchecked(din, dout, pts).expect("shape")
    }))
}

// ---------------------------------------------------------------------------
// Constructive witnesses

/// `Γ_j(ρ) = t·tr(ρM_j)σ + (1−t)·p_j·E(ρ)`, an instrument with marginals
/// `(tM + (1−t)T_p, tT_σ + (1−t)E)`.
pub fn remark_half_witness(
    m: &Povm,
    e: &ChannelChoi,
    p: &[f64],
    sigma: &CMatrix,
    t: f64,
) -> Result<Instrument> {
    if m.dim() != e.din() || p.len() != m.outcomes() || sigma.dim() != e.dout() {
        return Err(Error::Dimension(
            "inconsistent shapes for the mixed instrument".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::WeightOutOfRange(t));
    }
    crate::devices::check_distribution(p)?;
    let blocks = m
        .effects()
        .iter()
        .zip(p)
        .map(|(mj, &pj)| {
            let mut b = kron(sigma, &mj.transpose()).scale(t);
            b.axpy((1.0 - t) * pj, e.choi());
            b
        })
        .collect();
    Instrument::new_unchecked(e.din(), e.dout(), blocks)
}

/// `ρ ↦ t·E(ρ)⊗τ + (1−t)·σ⊗F(ρ)`, a joint channel with marginals
/// `(tE + (1−t)T_σ, tT_τ + (1−t)F)`.
pub fn remark_half_channel_witness(
    e: &ChannelChoi,
    f: &ChannelChoi,
    sigma: &CMatrix,
    tau: &CMatrix,
    t: f64,
) -> Result<JointChannel> {
    if e.din() != f.din() || sigma.dim() != e.dout() || tau.dim() != f.dout() {
        return Err(Error::Dimension(
            "inconsistent shapes for the mixed joint channel".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::WeightOutOfRange(t));
    }
    let (k1, k2) = (e.dout(), f.dout());
    let choi = crate::devices::choi_from_map(e.din(), k1 * k2, |x| {
        let mut out = kron(&e.apply(x), tau).scale(t);
        out.axpy(1.0 - t, &kron(sigma, &f.apply(x)));
        out
    });
    JointChannel::new(ChannelChoi::new_unchecked(e.din(), k1 * k2, choi)?, k1, k2)
}

/// `G_{jk} = t·A_j q_k + (1−t)·p_j B_k`, a joint observable with marginals
/// `(tA + (1−t)T_p, tT_q + (1−t)B)`.
pub fn remark_half_joint_observable(
    a: &Povm,
    b: &Povm,
    p: &[f64],
    q: &[f64],
    t: f64,
) -> Result<JointObservable> {
    if a.dim() != b.dim() || p.len() != a.outcomes() || q.len() != b.outcomes() {
        return Err(Error::Dimension(
            "inconsistent shapes for the mixed joint observable".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::WeightOutOfRange(t));
    }
    let mut blocks = Vec::with_capacity(p.len() * q.len());
    for (aj, &pj) in a.effects().iter().zip(p) {
        for (bk, &qk) in b.effects().iter().zip(q) {
            let mut g = aj.scale(t * qk);
            g.axpy((1.0 - t) * pj, bk);
            blocks.push(g);
        }
    }
    JointObservable::new_unchecked(p.len(), q.len(), blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{constant_channel, trivial_observable, uniform_trivial_observable, Mix};
    use num_complex::Complex64 as C64;

    fn qubit_x_basis() -> Povm {
        let s = 1.0 / 2f64.sqrt();
        Povm::from_basis(&[
            vec![C64::new(s, 0.0), C64::new(s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(-s, 0.0)],
        ])
        .unwrap()
    }

    fn sample_point(n: usize, d: usize, seed: u64) -> Vec<CMatrix> {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        (0..n)
            .map(|_| CMatrix::from_fn(d, |_, _| C64::new(next(), next())).hermitian_part())
            .collect()
    }

    fn check_projection(aff: &dyn AffineSet, n: usize, d: usize) {
        let x = sample_point(n, d, 7);
        let z = sample_point(n, d, 11);
        let mut px = x.clone();
        aff.project(&mut px);
        assert!(
            aff.residual(&px) < 1e-13,
            "projected point violates constraints"
        );
        let mut ppx = px.clone();
        aff.project(&mut ppx);
        assert!(frob_dist(&px, &ppx) < 1e-13, "projection not idempotent");
        let mut pz = z;
        aff.project(&mut pz);
        // x − P(x) is orthogonal to every difference of affine points
        let ip: f64 = (0..n)
            .map(|i| (&x[i] - &px[i]).inner(&(&pz[i] - &px[i])))
            .sum();
        assert!(ip.abs() < 1e-12, "projection not orthogonal: {ip}");
    }

    #[test]
    fn affine_projections_are_orthogonal() {
        let a = Povm::computational(2);
        let b = qubit_x_basis()
            .mix(&uniform_trivial_observable(2), 0.5)
            .unwrap();
        let b3 = Povm::new(vec![
            CMatrix::real_diag(&[0.2, 0.5]),
            CMatrix::real_diag(&[0.3, 0.1]),
            CMatrix::real_diag(&[0.5, 0.4]),
        ])
        .unwrap();
        check_projection(&JmAffine::new(&a, &b), 4, 2);
        check_projection(&JmAffine::new(&a, &b3), 6, 2);
        let e = ChannelChoi::identity(2);
        let f = ChannelChoi::depolarizing(2);
        check_projection(&ChanAffine::new(&e, &f), 1, 8);
        let attach = ChannelChoi::from_map(2, 3, |x| {
            let mut out = CMatrix::zeros(3);
            out[(0, 0)] = x.trace();
            out
        })
        .unwrap();
        check_projection(&ChanAffine::new(&e, &attach), 1, 12);
        check_projection(&InsAffine::new(&b3, &attach), 3, 6);
        check_projection(&InsAffine::new(&a, &e), 2, 4);
    }

    #[test]
    fn sharp_observable_is_self_compatible() {
        let p = qubit_x_basis();
        let r = jm_feasible(&p, &p, &SolverConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Feasible);
        let w = r.witness.unwrap();
        w.validate(1e-7).unwrap();
        let naimark = JointObservable::diagonal(&p);
        for (x, y) in w.blocks().iter().zip(naimark.blocks()) {
            assert!(x.max_abs_diff(y) < 1e-6);
        }
    }

    #[test]
    fn unbiased_qubit_pair_is_incompatible() {
        let r = jm_feasible(
            &Povm::computational(2),
            &qubit_x_basis(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
        assert!(
            r.gap >= 1e-4 && r.certified_gap >= 1e-4 && r.gap >= r.certified_gap,
            "{} {} {}",
            r.gap,
            r.certified_gap,
            r.iterations
        );
    }

    #[test]
    fn depolarizing_pair_is_compatible() {
        let t = ChannelChoi::depolarizing(2);
        let r = channel_compat_feasible(&t, &t, &SolverConfig::default()).unwrap();
        assert!(r.is_feasible());
        let w = r.witness.unwrap();
        let (a, b) = w.marginals();
        assert!(a.choi().max_abs_diff(t.choi()) < 1e-7 && b.choi().max_abs_diff(t.choi()) < 1e-7);
    }

    #[test]
    fn no_cloning() {
        let id = ChannelChoi::identity(2);
        let r = channel_compat_feasible(&id, &id, &SolverConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
    }

    #[test]
    fn trivial_observable_with_any_channel() {
        let p = [0.1, 0.6, 0.3];
        let m = trivial_observable(&p, 2).unwrap();
        let e =
            ChannelChoi::unitary(&CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap())
                .unwrap();
        let r = obs_channel_feasible(&m, &e, &SolverConfig::default()).unwrap();
        assert!(r.is_feasible());
        assert_eq!(r.iterations, 0);
        let w = r.witness.unwrap();
        for (b, pj) in w.blocks().iter().zip(p) {
            assert!(b.max_abs_diff(&e.choi().scale(pj)) < 1e-12);
        }
    }

    #[test]
    fn sharp_observable_with_identity_is_incompatible() {
        let r = obs_channel_feasible(
            &Povm::computational(2),
            &ChannelChoi::identity(2),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
    }

    #[test]
    fn plain_alternating_projections_agree() {
        let cfg = SolverConfig {
            method: Method::Alternating,
            ..SolverConfig::default()
        };
        let p = qubit_x_basis();
        assert!(jm_feasible(&p, &p, &cfg).unwrap().is_feasible());
        let r = jm_feasible(&Povm::computational(2), &p, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Infeasible);
    }

    #[test]
    fn undecided_when_out_of_iterations() {
        let a = Povm::computational(2)
            .mix(&uniform_trivial_observable(2), 0.70712)
            .unwrap();
        let b = qubit_x_basis()
            .mix(&uniform_trivial_observable(2), 0.70712)
            .unwrap();
        let cfg = SolverConfig {
            max_iters: 3,
            ..SolverConfig::default()
        };
        let r = jm_feasible(&a, &b, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Undecided);
        assert!(r.witness.is_none());
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            feas_tol: 1e-3,
            infeas_threshold: 1e-4,
            ..SolverConfig::default()
        };
        assert!(jm_feasible(&Povm::computational(2), &Povm::computational(2), &bad).is_err());
    }

    #[test]
    fn dimension_errors() {
        let cfg = SolverConfig::default();
        assert!(matches!(
            jm_feasible(&Povm::computational(2), &Povm::computational(3), &cfg),
            Err(Error::Dimension(_))
        ));
        assert!(channel_compat_feasible(
            &ChannelChoi::identity(2),
            &ChannelChoi::identity(3),
            &cfg
        )
        .is_err());
        assert!(
            obs_channel_feasible(&Povm::computational(3), &ChannelChoi::identity(2), &cfg).is_err()
        );
    }

    #[test]
    fn half_witness_shapes() {
        let a = Povm::computational(2);
        let e = ChannelChoi::identity(2);
        let p = [0.5, 0.5];
        let sigma = CMatrix::unit(2, 0, 0);
        let w0 = remark_half_witness(&a, &e, &p, &sigma, 0.0).unwrap();
        for b in w0.blocks() {
            assert!(b.max_abs_diff(&e.choi().scale(0.5)) < 1e-15);
        }
        let w1 = remark_half_witness(&a, &e, &p, &sigma, 1.0).unwrap();
        let rho = CMatrix::from_real_rows(&[&[0.7, 0.2], &[0.2, 0.3]]).unwrap();
        assert!(w1.apply(0, &rho).max_abs_diff(&sigma.scale(0.7)) < 1e-15);
        let wh = remark_half_witness(&a, &e, &p, &sigma, 0.5).unwrap();
        wh.validate(1e-12).unwrap();
        let (m, ch) = wh.marginals().unwrap();
        let tm = trivial_observable(&p, 2).unwrap();
        let want_m = a.mix(&tm, 0.5).unwrap();
        let want_e = constant_channel(&sigma, 2).unwrap().mix(&e, 0.5).unwrap();
        for j in 0..2 {
            assert!(m.effect(j).max_abs_diff(want_m.effect(j)) < 1e-12);
        }
        assert!(ch.choi().max_abs_diff(want_e.choi()) < 1e-12);
    }
}
