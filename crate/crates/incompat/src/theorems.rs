//! Closed-form robustness values with their optimal witnesses, checked end to
//! end against the feasibility and robustness engines.
//!
//! * Weyl pair `(Q, P)`: `W = ½(1 + 1/√d)`.
//! * Identity channel against itself (and every decodable pair): `W = ½(1 + 1/d)`.
//! * Von Neumann observable with the identity channel: `W = ½(1 + 1/√d)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compat::{
    channel_compat_feasible, jm_feasible, obs_channel_feasible, SolverConfig, Verdict,
};
use crate::covariance::{
    cloner, covariant_mixture, covariant_pair_jm_oracle, ew_joint_channel, ew_tetrahedron_point,
    fourier_invariant_optimum, joint_from_state, weyl_witness_state, CovariantObsPair, WeylRep,
};
use crate::devices::{
    lueders_channel, uniform_trivial_observable, ChannelChoi, DevicePair, Instrument, JointChannel,
    JointObservable, MarkovKernel, Mix, Povm,
};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, omega, partial_trace, CMatrix};
use crate::par;
use crate::random::{haar_unitary, random_channel, random_kernel, rng};
use crate::robustness::{relative_robustness, CompatOracle, WeylPairOracle, DEVICE_BISECT_TOL};

/// Witness validity threshold.
pub const WITNESS_TOL: f64 = 1e-8;
/// Agreement required between numeric estimates and closed forms.
pub const VALUE_TOL: f64 = 2e-3;
/// Offset above the closed form at which infeasibility must be detected.
pub const ABOVE_OFFSET: f64 = 5e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Weyl,
    Decodable,
    Vn,
}

impl Theorem {
    pub const ALL: [Theorem; 3] = [Theorem::Weyl, Theorem::Decodable, Theorem::Vn];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::Weyl => "weyl_pair",
            Theorem::Decodable => "decodable_channels",
            Theorem::Vn => "vn_obs_decodable",
        }
    }

    /// Dimensions the check is run for.
    pub fn supports(self, d: usize) -> bool {
        match self {
            Theorem::Decodable => (2..=4).contains(&d),
            _ => (2..=5).contains(&d),
        }
    }

    pub fn closed_form(self, d: usize) -> f64 {
        let d = d as f64;
        match self {
            Theorem::Decodable => 0.5 * (1.0 + 1.0 / d),
            _ => 0.5 * (1.0 + 1.0 / d.sqrt()),
        }
    }

    pub fn run(self, d: usize, cfg: &SolverConfig) -> Result<TheoremReport> {
        match self {
            Theorem::Weyl => weyl_pair_theorem_with(d, cfg),
            Theorem::Decodable => decodable_channels_theorem_with(d, cfg),
            Theorem::Vn => vn_obs_decodable_theorem_with(d, cfg),
        }
    }
}

impl std::str::FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weyl" | "weyl_pair" => Ok(Theorem::Weyl),
            "decodable" | "decodable_channels" => Ok(Theorem::Decodable),
            "vn" | "vn_obs_decodable" => Ok(Theorem::Vn),
            _ => Err(Error::ConstraintViolation(format!("unknown theorem '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub name: String,
    pub d: usize,
    pub closed_form: f64,
    pub numeric_estimate: f64,
    pub witnesses_validated: bool,
    /// Named residuals of the individual checks.
    pub residuals: BTreeMap<String, f64>,
    /// Named pass/fail outcomes, including solver verdicts.
    pub checks: BTreeMap<String, bool>,
}

impl TheoremReport {
    fn new(theorem: Theorem, d: usize) -> Self {
        Self {
            name: theorem.name().into(),
            d,
            closed_form: theorem.closed_form(d),
            numeric_estimate: f64::NAN,
            witnesses_validated: false,
            residuals: BTreeMap::new(),
            checks: BTreeMap::new(),
        }
    }

    fn residual(&mut self, key: &str, value: f64, tol: f64) {
        self.residuals.insert(key.into(), value);
        self.checks.insert(key.into(), value <= tol);
    }

    fn check(&mut self, key: &str, ok: bool) {
        self.checks.insert(key.into(), ok);
    }

    pub fn value_error(&self) -> f64 {
        (self.numeric_estimate - self.closed_form).abs()
    }

    pub fn passed(&self) -> bool {
        self.witnesses_validated
            && self.value_error() <= VALUE_TOL
            && self.checks.values().all(|&b| b)
    }
}

fn check_dim(theorem: Theorem, d: usize) -> Result<()> {
    if theorem.supports(d) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{} is checked for other dimensions, not d = {d}",
            theorem.name()
        )))
    }
}

pub(crate) fn povm_diff(a: &Povm, b: &Povm) -> f64 {
    if a.outcomes() != b.outcomes() {
        return f64::INFINITY;
    }
    a.effects()
        .iter()
        .zip(b.effects())
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

pub(crate) fn channel_diff(a: &ChannelChoi, b: &ChannelChoi) -> f64 {
    if a.din() != b.din() || a.dout() != b.dout() {
        return f64::INFINITY;
    }
    a.choi().max_abs_diff(b.choi())
}

/// `t·a + (1−t)·b` for any real `t`, without validity checks.
fn povm_affine(a: &Povm, b: &Povm, t: f64) -> Povm {
    let effects = a
        .effects()
        .iter()
        .zip(b.effects())
        .map(|(x, y)| {
            let mut e = x.scale(t);
            e.axpy(1.0 - t, y);
            e
        })
        .collect();
    Povm::new_unchecked(effects).expect("same shapes")
}

fn channel_affine(a: &ChannelChoi, b: &ChannelChoi, t: f64) -> ChannelChoi {
    let mut c = a.choi().scale(t);
    c.axpy(1.0 - t, b.choi());
    ChannelChoi::new_unchecked(a.din(), a.dout(), c).expect("same shapes")
}

// ---------------------------------------------------------------------------
// Device pairs of the three examples

/// Sharp Weyl pair and its optimal noise, as covariant parameters.
pub fn weyl_pair_and_noise(d: usize) -> Result<(CovariantObsPair, CovariantObsPair)> {
    Ok((
        CovariantObsPair::sharp(d)?,
        CovariantObsPair::weyl_noise(d)?,
    ))
}

/// `E = −id/(d²−1) + d²T/(d²−1)`, the optimal noise for `(id, id)`.
pub fn decodable_noise(d: usize) -> Result<ChannelChoi> {
    let dd = (d * d) as f64;
    covariant_mixture(dd / (dd - 1.0), d)
}

/// `𝒜 = (d+2)/(2(d+1)) id + d/(2(d+1)) T`, the common marginal of the cloner.
pub fn cloner_marginal(d: usize) -> Result<ChannelChoi> {
    covariant_mixture(d as f64 / (2.0 * (d as f64 + 1.0)), d)
}

/// `B = (I − A_j)/(d−1)` and `ℬ = −id/(d−1) + d·E_A/(d−1)` for the
/// computational-basis observable `A`.
pub fn vn_noise(d: usize) -> Result<(Povm, ChannelChoi)> {
    let a = Povm::computational(d);
    let df = d as f64;
    let b = povm_affine(&a, &uniform_trivial_observable(d), -1.0 / (df - 1.0));
    b.validate(1e-12)?;
    let e_a = lueders_channel(&a)?;
    let bchan = channel_affine(&ChannelChoi::identity(d), &e_a, -1.0 / (df - 1.0));
    bchan.validate(1e-12)?;
    Ok((b, bchan))
}

/// `Γ_j(ρ) = c(I/√d + A_j)ρ(I/√d + A_j)` with `c = √d/(2(√d+1))`.
pub fn optimal_vn_instrument(d: usize) -> Result<Instrument> {
    let sd = (d as f64).sqrt();
    let c = sd / (2.0 * (sd + 1.0));
    let blocks = (0..d)
        .map(|j| {
            let mut k = CMatrix::identity(d).scale(1.0 / sd);
            k += &CMatrix::unit(d, j, j);
            crate::devices::choi_from_map(d, d, |x| x.conjugate_by(&k).scale(c))
        })
        .collect();
    Instrument::new(d, d, blocks)
}

// ---------------------------------------------------------------------------

pub fn weyl_pair_theorem(d: usize) -> Result<TheoremReport> {
    weyl_pair_theorem_with(d, &SolverConfig::default())
}

pub fn weyl_pair_theorem_with(d: usize, cfg: &SolverConfig) -> Result<TheoremReport> {
    check_dim(Theorem::Weyl, d)?;
    let mut rep = TheoremReport::new(Theorem::Weyl, d);
    let t = rep.closed_form;
    let weyl = WeylRep::new(d)?;
    let (x, y) = weyl_pair_and_noise(d)?;

    // explicit joint observable from the optimal state
    let g = joint_from_state(&weyl_witness_state(d)?, &weyl)?;
    let target = x.mix(&y, t)?;
    let (m, n) = target.observables(&weyl)?;
    let (gm, gn) = g.marginals();
    rep.residual("witness_validity", joint_violation(&g), WITNESS_TOL);
    rep.residual(
        "witness_marginals",
        povm_diff(&gm, &m).max(povm_diff(&gn, &n)),
        1e-10,
    );
    rep.witnesses_validated = rep.checks.values().all(|&b| b);

    // both oracles at the boundary and just past it
    let above = x.mix(&y, (t + ABOVE_OFFSET).min(1.0))?;
    let (ma, na) = above.observables(&weyl)?;
    let verdicts = par::map_range(4, |i| match i {
        0 => covariant_pair_jm_oracle(&target, cfg).map(|r| (r.verdict, r.residual)),
        1 => jm_feasible(&m, &n, cfg).map(|r| (r.verdict, r.residual)),
        2 => covariant_pair_jm_oracle(&above, cfg).map(|r| (r.verdict, r.residual)),
        _ => jm_feasible(&ma, &na, cfg).map(|r| (r.verdict, r.residual)),
    });
    let v: Vec<(Verdict, f64)> = verdicts.into_iter().collect::<Result<_>>()?;
    rep.check(
        "state_oracle_at_closed_form_feasible",
        v[0].0 == Verdict::Feasible,
    );
    rep.check(
        "jm_solver_at_closed_form_feasible",
        v[1].0 == Verdict::Feasible,
    );
    rep.residual("jm_solver_residual_at_closed_form", v[1].1, 1e-7);
    rep.check(
        "state_oracle_above_infeasible",
        v[2].0 == Verdict::Infeasible,
    );
    rep.check("jm_solver_above_infeasible", v[3].0 == Verdict::Infeasible);

    rep.numeric_estimate = relative_robustness(
        &x,
        &y,
        &WeylPairOracle { cfg: cfg.clone() },
        DEVICE_BISECT_TOL,
    )?
    .value;
    Ok(rep)
}

fn joint_violation(g: &JointObservable) -> f64 {
    let psd = g
        .blocks()
        .iter()
        .map(|b| (-min_eigenvalue(&b.hermitian_part()).unwrap_or(f64::NEG_INFINITY)).max(0.0));
    let mut sum = CMatrix::zeros(g.dim());
    for b in g.blocks() {
        sum += b;
    }
    psd.fold(sum.max_abs_diff(&CMatrix::identity(g.dim())), f64::max)
}

fn channel_violation(c: &ChannelChoi) -> f64 {
    let psd = (-min_eigenvalue(&c.choi().hermitian_part()).unwrap_or(f64::NEG_INFINITY)).max(0.0);
    let tp = partial_trace(c.choi(), &[c.dout(), c.din()], &[1])
        .expect("dims")
        .max_abs_diff(&CMatrix::identity(c.din()));
    psd.max(tp)
}

fn instrument_violation(g: &Instrument) -> f64 {
    let psd = g
        .blocks()
        .iter()
        .map(|b| (-min_eigenvalue(&b.hermitian_part()).unwrap_or(f64::NEG_INFINITY)).max(0.0))
        .fold(0.0, f64::max);
    let mut sum = CMatrix::zeros(g.din() * g.dout());
    for b in g.blocks() {
        sum += b;
    }
    let tp = partial_trace(&sum, &[g.dout(), g.din()], &[1])
        .expect("dims")
        .max_abs_diff(&CMatrix::identity(g.din()));
    psd.max(tp)
}

// ---------------------------------------------------------------------------

pub fn decodable_channels_theorem(d: usize) -> Result<TheoremReport> {
    decodable_channels_theorem_with(d, &SolverConfig::default())
}

pub fn decodable_channels_theorem_with(d: usize, cfg: &SolverConfig) -> Result<TheoremReport> {
    check_dim(Theorem::Decodable, d)?;
    let mut rep = TheoremReport::new(Theorem::Decodable, d);
    let t = rep.closed_form;
    let id = ChannelChoi::identity(d);
    let noise = decodable_noise(d)?;
    let marginal = cloner_marginal(d)?;

    // (i) the cloner realises 𝒜 twice
    let cl = cloner(d)?;
    let (c1, c2) = cl.marginals();
    rep.residual(
        "cloner_validity",
        channel_violation(&cl.channel),
        WITNESS_TOL,
    );
    rep.residual(
        "cloner_marginals",
        channel_diff(&c1, &marginal).max(channel_diff(&c2, &marginal)),
        1e-10,
    );
    // (ii) the noise is a channel compatible with itself, via M₊
    rep.residual("noise_validity", channel_violation(&noise), WITNESS_TOL);
    let plus = ew_joint_channel(&ew_tetrahedron_point(1.0, 0.0, 0.0, 0.0, d)?, d)?;
    let (p1, p2) = plus.marginals();
    rep.residual(
        "noise_self_witness",
        channel_diff(&p1, &noise).max(channel_diff(&p2, &noise)),
        1e-10,
    );
    // (iii) 𝒜 = t·id + (1−t)·E
    rep.residual(
        "decomposition",
        channel_diff(&channel_affine(&id, &noise, t), &marginal),
        1e-12,
    );
    rep.witnesses_validated = rep.checks.values().all(|&b| b);

    // (iv) tr₂[M̃₊] − tΩ is PSD exactly up to t
    let tilde = ew_tetrahedron_point(0.0, 0.0, 1.0, 1.0, d)?;
    let marg = partial_trace(&tilde, &[d, d, d], &[0, 2])?;
    let boundary = |s: f64| -> Result<f64> {
        let mut m = marg.clone();
        m.axpy(-s, &omega(d));
        min_eigenvalue(&m)
    };
    let (at, lo, hi) = (boundary(t)?, boundary(t - 1e-9)?, boundary(t + 1e-9)?);
    rep.residual("choi_boundary_at_t", at.abs(), 1e-12);
    rep.check("choi_boundary_sign_flip", lo > 0.0 && hi < 0.0);

    let x = DevicePair::Chan {
        first: id.clone(),
        second: id.clone(),
    };
    let y = DevicePair::Chan {
        first: noise.clone(),
        second: noise.clone(),
    };
    let oracle = CompatOracle::new(cfg.clone());
    let solver_jobs = par::map_range(2, |i| match i {
        0 => channel_compat_feasible(&noise, &noise, cfg).map(|r| r.verdict),
        _ => {
            let above = x.mix(&y, t + ABOVE_OFFSET)?;
            let DevicePair::Chan { first, second } = above else {
                unreachable!()
            };
            channel_compat_feasible(&first, &second, cfg).map(|r| r.verdict)
        }
    });
    let v: Vec<Verdict> = solver_jobs.into_iter().collect::<Result<_>>()?;
    rep.check("noise_self_compatible_solver", v[0] == Verdict::Feasible);
    rep.check("solver_above_infeasible", v[1] == Verdict::Infeasible);

    rep.numeric_estimate = relative_robustness(&x, &y, &oracle, DEVICE_BISECT_TOL)?.value;
    Ok(rep)
}

// ---------------------------------------------------------------------------

pub fn vn_obs_decodable_theorem(d: usize) -> Result<TheoremReport> {
    vn_obs_decodable_theorem_with(d, &SolverConfig::default())
}

pub fn vn_obs_decodable_theorem_with(d: usize, cfg: &SolverConfig) -> Result<TheoremReport> {
    check_dim(Theorem::Vn, d)?;
    let mut rep = TheoremReport::new(Theorem::Vn, d);
    let t = rep.closed_form;
    let sd = (d as f64).sqrt();
    let a = Povm::computational(d);
    let id = ChannelChoi::identity(d);
    let e_a = lueders_channel(&a)?;

    // (i) noise pair
    let (b, bchan) = vn_noise(d)?;
    rep.residual(
        "noise_channel_validity",
        channel_violation(&bchan),
        WITNESS_TOL,
    );
    rep.residual("noise_povm_validity", povm_violation(&b), WITNESS_TOL);
    // (ii) explicit instrument and its marginals
    let gamma = optimal_vn_instrument(d)?;
    rep.residual(
        "instrument_validity",
        instrument_violation(&gamma),
        WITNESS_TOL,
    );
    let w = (sd + 2.0) / (2.0 * (sd + 1.0));
    let m = povm_affine(&a, &uniform_trivial_observable(d), w);
    let e = channel_affine(&id, &e_a, w);
    let (gm, ge) = gamma.marginals()?;
    rep.residual(
        "instrument_marginals",
        povm_diff(&gm, &m).max(channel_diff(&ge, &e)),
        1e-10,
    );
    // (iii) (M, E) = t(A, id) + (1−t)(B, ℬ)
    let dec = povm_diff(&povm_affine(&a, &b, t), &m)
        .max(channel_diff(&channel_affine(&id, &bchan, t), &e));
    rep.residual("decomposition", dec, 1e-12);
    // (v) reduced problem
    let opt = fourier_invariant_optimum(d)?;
    rep.residual("fourier_optimum", (opt.value - t).abs(), 1e-12);
    rep.witnesses_validated = rep.checks.values().all(|&b| b);

    // (iv) solver flip around t
    let x = DevicePair::Obschan {
        first: a.clone(),
        second: id.clone(),
    };
    let y = DevicePair::Obschan {
        first: b,
        second: bchan,
    };
    let verdicts = par::map_range(2, |i| {
        let s = if i == 0 { t - VALUE_TOL } else { t + VALUE_TOL };
        let DevicePair::Obschan { first, second } = x.mix(&y, s)? else {
            unreachable!()
        };
        obs_channel_feasible(&first, &second, cfg).map(|r| r.verdict)
    });
    let v: Vec<Verdict> = verdicts.into_iter().collect::<Result<_>>()?;
    rep.check("solver_below_feasible", v[0] == Verdict::Feasible);
    rep.check("solver_above_infeasible", v[1] == Verdict::Infeasible);

    rep.numeric_estimate =
        relative_robustness(&x, &y, &CompatOracle::new(cfg.clone()), DEVICE_BISECT_TOL)?.value;
    Ok(rep)
}

fn povm_violation(p: &Povm) -> f64 {
    let psd = p
        .effects()
        .iter()
        .map(|e| (-min_eigenvalue(&e.hermitian_part()).unwrap_or(f64::NEG_INFINITY)).max(0.0))
        .fold(0.0, f64::max);
    let mut sum = CMatrix::zeros(p.dim());
    for e in p.effects() {
        sum += e;
    }
    psd.max(sum.max_abs_diff(&CMatrix::identity(p.dim())))
}

// ---------------------------------------------------------------------------

/// Every supported `(theorem, d)` row for the requested dimensions, in a
/// fixed order regardless of scheduling.
pub fn run_suite(
    dims: &[usize],
    only: Option<Theorem>,
    cfg: &SolverConfig,
) -> Result<Vec<TheoremReport>> {
    let jobs: Vec<(Theorem, usize)> = Theorem::ALL
        .iter()
        .filter(|th| only.is_none_or(|o| o == **th))
        .flat_map(|&th| {
            dims.iter()
                .filter(move |&&d| th.supports(d))
                .map(move |&d| (th, d))
        })
        .collect();
    par::map(&jobs, |&(th, d)| th.run(d, cfg))
        .into_iter()
        .collect()
}

/// Pretty JSON for a suite run. Maps are ordered, so equal reports always
/// render to identical bytes.
pub fn suite_json(reports: &[TheoremReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialise")
}

/// Fixed-width table with one row per report.
pub fn suite_table(reports: &[TheoremReport]) -> String {
    let mut out = format!(
        "{:<20} {:>2} {:>12} {:>12} {:>10} {:>9} {:>6}\n",
        "theorem", "d", "closed_form", "numeric", "|error|", "witnesses", "status"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<20} {:>2} {:>12.6} {:>12.6} {:>10.2e} {:>9} {:>6}\n",
            r.name,
            r.d,
            r.closed_form,
            r.numeric_estimate,
            r.value_error(),
            if r.witnesses_validated {
                "ok"
            } else {
                "FAILED"
            },
            if r.passed() { "PASS" } else { "FAIL" },
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Monotonicity under processing

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRow {
    pub pair: String,
    pub processing: String,
    pub index: usize,
    /// Robustness certified for the unprocessed pair.
    pub certified: f64,
    /// Validity and marginal error of the transported witness at `certified`.
    pub witness_residual: f64,
    /// Solver estimate for the processed pair, when computed.
    pub numeric_estimate: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub seed: u64,
    pub rows: Vec<MonotonicityRow>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Processings applied to each certified pair.
pub const PROCESSINGS_PER_PAIR: usize = 20;
/// How many processings per pair also get a full solver estimate.
pub const NUMERIC_PER_PAIR: usize = 2;

enum Processed {
    Jm {
        g: JointObservable,
        x: (Povm, Povm),
        y: (Povm, Povm),
    },
    Chan {
        g: JointChannel,
        x: (ChannelChoi, ChannelChoi),
        y: (ChannelChoi, ChannelChoi),
    },
    Obschan {
        g: Instrument,
        x: (Povm, ChannelChoi),
        y: (Povm, ChannelChoi),
    },
}

impl Processed {
    /// Validity violation of the witness plus its distance from the mixed
    /// processed pair at `t`.
    fn witness_residual(&self, t: f64) -> f64 {
        match self {
            Processed::Jm { g, x, y } => {
                let (a, b) = g.marginals();
                joint_violation(g)
                    .max(povm_diff(&a, &povm_affine(&x.0, &y.0, t)))
                    .max(povm_diff(&b, &povm_affine(&x.1, &y.1, t)))
            }
            Processed::Chan { g, x, y } => {
                let (a, b) = g.marginals();
                channel_violation(&g.channel)
                    .max(channel_diff(&a, &channel_affine(&x.0, &y.0, t)))
                    .max(channel_diff(&b, &channel_affine(&x.1, &y.1, t)))
            }
            Processed::Obschan { g, x, y } => {
                let (a, b) = crate::devices::instrument_marginals_unchecked(g);
                instrument_violation(g)
                    .max(povm_diff(&a, &povm_affine(&x.0, &y.0, t)))
                    .max(channel_diff(&b, &channel_affine(&x.1, &y.1, t)))
            }
        }
    }

    fn pairs(self) -> (DevicePair, DevicePair) {
        match self {
            Processed::Jm { x, y, .. } => (
                DevicePair::Jm {
                    first: x.0,
                    second: x.1,
                },
                DevicePair::Jm {
                    first: y.0,
                    second: y.1,
                },
            ),
            Processed::Chan { x, y, .. } => (
                DevicePair::Chan {
                    first: x.0,
                    second: x.1,
                },
                DevicePair::Chan {
                    first: y.0,
                    second: y.1,
                },
            ),
            Processed::Obschan { x, y, .. } => (
                DevicePair::Obschan {
                    first: x.0,
                    second: x.1,
                },
                DevicePair::Obschan {
                    first: y.0,
                    second: y.1,
                },
            ),
        }
    }
}

fn unitary_channel(u: &CMatrix) -> ChannelChoi {
    ChannelChoi::unitary(u).expect("Haar sample is unitary")
}

/// Applies [`PROCESSINGS_PER_PAIR`] random pre- and post-processings to each
/// certified `d = 2` pair and checks that the transported optimal witness
/// still certifies the original value for the processed pair.
pub fn monotonicity_suite(seed: u64, cfg: &SolverConfig) -> Result<MonotonicityReport> {
    let d = 2;
    let weyl = WeylRep::new(d)?;
    let (sx, sy) = weyl_pair_and_noise(d)?;
    let t_weyl = Theorem::Weyl.closed_form(d);
    let t_dec = Theorem::Decodable.closed_form(d);
    let t_vn = Theorem::Vn.closed_form(d);

    let (q, p) = sx.observables(&weyl)?;
    let (qn, pn) = sy.observables(&weyl)?;
    let g_weyl = joint_from_state(&weyl_witness_state(d)?, &weyl)?;
    let id = ChannelChoi::identity(d);
    let e_noise = decodable_noise(d)?;
    let g_clone = cloner(d)?;
    let a = Povm::computational(d);
    let (b, bchan) = vn_noise(d)?;
    let g_vn = optimal_vn_instrument(d)?;

    // Each job draws from its own stream so the report does not depend on
    // scheduling.
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for pair in 0..3 {
        for i in 0..PROCESSINGS_PER_PAIR {
            jobs.push((pair, i));
        }
    }
    let rows = par::map(&jobs, |&(pair, i)| -> Result<MonotonicityRow> {
        let mut r = rng(seed ^ ((pair as u64) << 32) ^ i as u64);
        let pre = i % 2 == 0;
        let (label, t, processed, kind) = match pair {
            0 => {
                let proc = if pre {
                    let gch = if i % 4 == 0 {
                        unitary_channel(&haar_unitary(&mut r, d))
                    } else {
                        random_channel(&mut r, d, 2)
                    };
                    Processed::Jm {
                        g: g_weyl.pre_process(&gch)?,
                        x: (q.pre_process(&gch)?, p.pre_process(&gch)?),
                        y: (qn.pre_process(&gch)?, pn.pre_process(&gch)?),
                    }
                } else {
                    let (nb, nc) = (1 + i % 3, 2 + i % 2);
                    let beta = random_kernel(&mut r, d, nb);
                    let gamma = random_kernel(&mut r, d, nc);
                    Processed::Jm {
                        g: g_weyl.post_process(&beta, &gamma)?,
                        x: (q.post_process(&beta)?, p.post_process(&gamma)?),
                        y: (qn.post_process(&beta)?, pn.post_process(&gamma)?),
                    }
                };
                (
                    "weyl_pair",
                    t_weyl,
                    proc,
                    if pre { "pre_channel" } else { "post_kernels" },
                )
            }
            1 => {
                let proc = if pre {
                    let gch = random_channel(&mut r, d, 2);
                    Processed::Chan {
                        g: g_clone.pre_compose(&gch)?,
                        x: (id.compose(&gch)?, id.compose(&gch)?),
                        y: (e_noise.compose(&gch)?, e_noise.compose(&gch)?),
                    }
                } else {
                    // decodable outputs for half the draws, general channels otherwise
                    let (ca, cb) = if i % 4 == 1 {
                        (
                            unitary_channel(&haar_unitary(&mut r, d)),
                            unitary_channel(&haar_unitary(&mut r, d)),
                        )
                    } else {
                        (random_channel(&mut r, d, 2), random_channel(&mut r, d, 2))
                    };
                    Processed::Chan {
                        g: g_clone.post_compose(&ca, &cb)?,
                        x: (ca.clone(), cb.clone()),
                        y: (ca.compose(&e_noise)?, cb.compose(&e_noise)?),
                    }
                };
                (
                    "identity_channels",
                    t_dec,
                    proc,
                    if pre { "pre_channel" } else { "post_channels" },
                )
            }
            _ => {
                let proc = if pre {
                    let gch = random_channel(&mut r, d, 2);
                    Processed::Obschan {
                        g: g_vn.pre_compose(&gch)?,
                        x: (a.pre_process(&gch)?, id.compose(&gch)?),
                        y: (b.pre_process(&gch)?, bchan.compose(&gch)?),
                    }
                } else {
                    // coarse-grain outcomes and post-process the output state
                    let beta = if i % 4 == 1 {
                        MarkovKernel::deterministic(d, 1, |_| 0)
                    } else {
                        random_kernel(&mut r, d, 1 + i % 3)
                    };
                    let c = random_channel(&mut r, d, 1 + i % 2);
                    Processed::Obschan {
                        g: g_vn.post_process(&beta)?.post_compose(&c)?,
                        x: (a.post_process(&beta)?, c.clone()),
                        y: (b.post_process(&beta)?, c.compose(&bchan)?),
                    }
                };
                (
                    "vn_with_identity",
                    t_vn,
                    proc,
                    if pre {
                        "pre_channel"
                    } else {
                        "post_kernel_channel"
                    },
                )
            }
        };
        let witness_residual = processed.witness_residual(t);
        let numeric_estimate = if i < NUMERIC_PER_PAIR {
            let (x, y) = processed.pairs();
            Some(
                relative_robustness(&x, &y, &CompatOracle::new(cfg.clone()), DEVICE_BISECT_TOL)?
                    .value,
            )
        } else {
            None
        };
        let passed =
            witness_residual <= WITNESS_TOL && numeric_estimate.is_none_or(|w| w >= t - VALUE_TOL);
        Ok(MonotonicityRow {
            pair: label.into(),
            processing: kind.into(),
            index: i,
            certified: t,
            witness_residual,
            numeric_estimate,
            passed,
        })
    });
    Ok(MonotonicityReport {
        seed,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
