//! Symmetry reductions checked against independent oracles: sampled and
//! design-exact twirls, the covariant joint-channel projection, and the
//! Weyl state reduction.

use incompat::compat::{jm_feasible, obs_channel_feasible, SolverConfig, Verdict};
use incompat::covariance::*;
use incompat::devices::{ChannelChoi, JointChannel, JointObservable, Mix};
use incompat::linalg::{kron, partial_trace, CMatrix};
use incompat::random::{
    haar_unitary, random_channel, random_instrument, random_joint_channel, random_povm,
    random_state, random_vector, rng,
};
use num_complex::Complex64 as C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `ρ ↦ U* E(UρU*) U`
fn conjugated(e: &ChannelChoi, u: &CMatrix) -> ChannelChoi {
    let d = e.din();
    let ua = u.adjoint();
    ChannelChoi::from_map(d, d, |x| e.apply(&x.conjugate_by(u)).conjugate_by(&ua)).unwrap()
}

/// `F ↦ (U⊗U)* F(UρU*) (U⊗U)` for joint channels on `C^d → C^d ⊗ C^d`.
fn conjugated_joint(f: &JointChannel, u: &CMatrix) -> CMatrix {
    let d = f.channel.din();
    let uu = kron(u, u).adjoint();
    ChannelChoi::from_map(d, d * d, |x| {
        f.channel.apply(&x.conjugate_by(u)).conjugate_by(&uu)
    })
    .unwrap()
    .to_dual_choi()
}

fn sigma_x() -> CMatrix {
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

/// Single-qubit Clifford group modulo phases, by closure over `H` and `S`.
fn clifford_group() -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = CMatrix::from_real_rows(&[&[s, s], &[s, -s]]).unwrap();
    let ph = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 1.0)]);
    let normalise = |m: CMatrix| {
        let pivot = *m.as_slice().iter().find(|z| z.norm() > 1e-6).unwrap();
        m.scale_c(pivot.conj() / pivot.norm())
    };
    let mut group = vec![CMatrix::identity(2)];
    let mut frontier = group.clone();
    while let Some(g) = frontier.pop() {
        for gen in [&h, &ph] {
            let n = normalise(gen.matmul(&g));
            if !group.iter().any(|x| x.max_abs_diff(&n) < 1e-9) {
                group.push(n.clone());
                frontier.push(n);
            }
        }
    }
    group
}

/// Sample mean and per-entry standard error of the Choi matrices of `n`
/// Haar-conjugated copies of `e`.
fn monte_carlo_twirl(e: &ChannelChoi, n: usize, seed: u64) -> (CMatrix, Vec<f64>) {
    let d = e.din();
    let mut r = rng(seed);
    let dim = d * d;
    let mut sum = CMatrix::zeros(dim);
    let mut sq = vec![0.0; dim * dim];
    for _ in 0..n {
        let u = haar_unitary(&mut r, d);
        let ch = conjugated(e, &u);
        for (k, z) in ch.choi().as_slice().iter().enumerate() {
            sq[k] += z.norm_sqr();
        }
        sum += ch.choi();
    }
    let mean = sum.scale(1.0 / n as f64);
    let se = mean
        .as_slice()
        .iter()
        .zip(&sq)
        .map(|(m, s)| ((s / n as f64 - m.norm_sqr()).max(0.0) / (n as f64 - 1.0)).sqrt())
        .collect();
    (mean, se)
}

#[test]
fn clifford_group_has_24_elements() {
    assert_eq!(clifford_group().len(), 24);
}

#[test]
fn twirl_matches_clifford_design_average() {
    // the qubit Clifford group is a unitary 2-design, so its average is the
    // Haar twirl exactly
    let cliff = clifford_group();
    let mut r = rng(31);
    let mut channels = vec![
        ChannelChoi::unitary(&sigma_x()).unwrap(),
        ChannelChoi::identity(2),
    ];
    for rank in 1..=4 {
        channels.push(random_channel(&mut r, 2, rank));
    }
    for e in &channels {
        let mut avg = CMatrix::zeros(4);
        for u in &cliff {
            avg.axpy(1.0 / cliff.len() as f64, conjugated(e, u).choi());
        }
        let exact = unitary_twirl_channel(e).unwrap();
        assert!(avg.max_abs_diff(exact.choi()) < 1e-12);
    }
}

#[test]
fn sigma_x_twirl_is_fully_mixing_on_the_traceless_part() {
    let e = ChannelChoi::unitary(&sigma_x()).unwrap();
    assert!(entanglement_fidelity(&e).unwrap().abs() < 1e-15);
    let exact = unitary_twirl_channel(&e).unwrap();
    assert!(
        exact
            .choi()
            .max_abs_diff(covariant_mixture(4.0 / 3.0, 2).unwrap().choi())
            < 1e-12
    );
    // traceless inputs are mapped to −⅓ of themselves
    let z = CMatrix::real_diag(&[1.0, -1.0]);
    assert!(exact.apply(&z).max_abs_diff(&z.scale(-1.0 / 3.0)) < 1e-12);
}

#[test]
fn monte_carlo_twirl_agrees_within_sampling_error() {
    let e = ChannelChoi::unitary(&sigma_x()).unwrap();
    let exact = unitary_twirl_channel(&e).unwrap();
    // 200 samples: per-entry standard errors are 0.01–0.03, so entries are
    // compared at four standard errors rather than a fixed 2e-2
    let (mean, se) = monte_carlo_twirl(&e, 200, 7);
    for (k, (m, x)) in mean
        .as_slice()
        .iter()
        .zip(exact.choi().as_slice())
        .enumerate()
    {
        assert!(
            (m - x).norm() <= 4.0 * se[k] + 1e-12,
            "entry {k}: {m} vs {x} (se {})",
            se[k]
        );
    }
    // enough samples for the absolute 2e-2 bound
    let (mean, _) = monte_carlo_twirl(&e, 20_000, 8);
    assert!(mean.max_abs_diff(exact.choi()) < 2e-2);
}

#[test]
fn monte_carlo_twirl_of_random_channels() {
    let mut r = rng(41);
    for seed in 0..3 {
        let e = random_channel(&mut r, 3, 2);
        let exact = unitary_twirl_channel(&e).unwrap();
        let (mean, se) = monte_carlo_twirl(&e, 400, 100 + seed);
        for (k, (m, x)) in mean
            .as_slice()
            .iter()
            .zip(exact.choi().as_slice())
            .enumerate()
        {
            assert!((m - x).norm() <= 4.0 * se[k] + 1e-12, "entry {k}");
        }
    }
}

#[test]
fn twirl_preserves_fidelity_and_is_idempotent() {
    let mut r = rng(5);
    for d in 2..=4 {
        for _ in 0..5 {
            let e = random_channel(&mut r, d, 2);
            let t = unitary_twirl_channel(&e).unwrap();
            assert!(
                (entanglement_fidelity(&t).unwrap() - entanglement_fidelity(&e).unwrap()).abs()
                    < 1e-12
            );
            let tt = unitary_twirl_channel(&t).unwrap();
            assert!(tt.choi().max_abs_diff(t.choi()) < 1e-12);
            // covariance of the result
            let u = haar_unitary(&mut r, d);
            assert!(conjugated(&t, &u).choi().max_abs_diff(t.choi()) < 1e-10);
        }
    }
}

#[test]
fn ew_projection_is_the_clifford_twirl_at_d2() {
    // the qubit Clifford group is a 3-design, enough for three tensor factors
    let cliff = clifford_group();
    let mut r = rng(12);
    for _ in 0..5 {
        let f = random_joint_channel(&mut r, 2, 2, 2, 2);
        let mut avg = CMatrix::zeros(8);
        for u in &cliff {
            avg.axpy(1.0 / cliff.len() as f64, &conjugated_joint(&f, u));
        }
        let projected = ew_project(&f.channel.to_dual_choi(), 2).unwrap();
        assert!(avg.max_abs_diff(&projected) < 1e-12);
    }
}

#[test]
fn ew_projection_lands_on_covariant_joint_channels() {
    let mut r = rng(13);
    for d in 2..=3 {
        for _ in 0..3 {
            let f = random_joint_channel(&mut r, d, d, d, 2);
            let m = ew_project(&f.channel.to_dual_choi(), d).unwrap();
            assert!(ew_project(&m, d).unwrap().max_abs_diff(&m) < 1e-10);
            let g = ew_joint_channel(&m, d).unwrap();
            for _ in 0..3 {
                let u = haar_unitary(&mut r, d);
                assert!(conjugated_joint(&g, &u).max_abs_diff(&m) < 1e-10);
            }
        }
    }
}

#[test]
fn ew_projection_fixes_covariant_joint_channels() {
    for d in 2..=3 {
        let id = CMatrix::identity(d).scale(1.0 / d as f64);
        let keep_first = ChannelChoi::from_map(d, d * d, |x| kron(x, &id)).unwrap();
        let keep_second = ChannelChoi::from_map(d, d * d, |x| kron(&id, x)).unwrap();
        let clone = cloner(d).unwrap().channel;
        for ch in [&keep_first, &keep_second, &clone] {
            let m = ch.to_dual_choi();
            assert!(ew_project(&m, d).unwrap().max_abs_diff(&m) < 1e-10);
        }
    }
}

#[test]
fn weyl_witness_does_not_depend_on_xi() {
    let mut r = rng(17);
    for d in 2..=5 {
        let rep = weyl_rep(d).unwrap();
        let reference = weyl_witness_state(d).unwrap();
        for k in [1, d, 3] {
            let xi = random_vector(&mut r, k);
            let eta = weyl_witness_dilation(d, &xi).unwrap();
            assert!((eta.trace().re - 1.0).abs() < 1e-12);
            let rho = partial_trace(&eta, &[d, k], &[0]).unwrap();
            assert!(rho.max_abs_diff(&reference) < 1e-12);
            let g = joint_from_state(&rho, &rep).unwrap();
            let g0 = joint_from_state(&reference, &rep).unwrap();
            for (a, b) in g.blocks().iter().zip(g0.blocks()) {
                assert!(a.max_abs_diff(b) < 1e-12);
            }
        }
        assert!(weyl_witness_dilation(d, &[c(2.0, 0.0)]).is_err());
    }
}

#[test]
fn weyl_witness_realises_the_optimal_mixture() {
    for d in 2..=5 {
        let rep = weyl_rep(d).unwrap();
        let t = 0.5 * (1.0 + 1.0 / (d as f64).sqrt());
        let target = CovariantObsPair::sharp(d)
            .unwrap()
            .mix(&CovariantObsPair::weyl_noise(d).unwrap(), t)
            .unwrap();
        let (mu, nu) = state_distributions(&weyl_witness_state(d).unwrap(), &rep);
        for j in 0..d {
            assert!((mu[j] - target.mu[j]).abs() < 1e-12);
            assert!((nu[j] - target.nu[j]).abs() < 1e-12);
        }
    }
}

#[test]
fn state_oracle_flips_at_the_closed_form() {
    let cfg = SolverConfig::default();
    for d in 2..=4 {
        let t_star = 0.5 * (1.0 + 1.0 / (d as f64).sqrt());
        let sharp = CovariantObsPair::sharp(d).unwrap();
        let noise = CovariantObsPair::weyl_noise(d).unwrap();
        let at = |t: f64| {
            covariant_pair_jm_oracle(&sharp.mix(&noise, t).unwrap(), &cfg)
                .unwrap()
                .verdict
        };
        assert_eq!(at(t_star - 2e-3), Verdict::Feasible, "d={d}");
        assert_eq!(at(t_star + 2e-3), Verdict::Infeasible, "d={d}");
    }
}

fn random_joint_observable(r: &mut impl rand::Rng, d: usize) -> JointObservable {
    let p = random_povm(r, d, d * d);
    JointObservable::new(d, d, p.effects().to_vec()).unwrap()
}

#[test]
fn covariantization_preserves_joint_measurability() {
    let cfg = SolverConfig::default();
    let mut r = rng(23);
    for i in 0..20 {
        let d = 2 + i % 2;
        let rep = weyl_rep(d).unwrap();
        let g = random_joint_observable(&mut r, d);
        let (a, b) = g.marginals();
        let (aw, bw) = covariantize_obs_pair(&a, &b, &rep).unwrap();
        // the covariantized joint observable has the covariantized marginals
        let gw = covariantize_joint(&g, &rep).unwrap();
        gw.validate(1e-10).unwrap();
        let (ga, gb) = gw.marginals();
        for (x, y) in ga
            .effects()
            .iter()
            .zip(aw.effects())
            .chain(gb.effects().iter().zip(bw.effects()))
        {
            assert!(x.max_abs_diff(y) < 1e-10);
        }
        if i < 6 {
            assert_eq!(
                jm_feasible(&aw, &bw, &cfg).unwrap().verdict,
                Verdict::Feasible
            );
        }
    }
}

#[test]
fn covariantization_preserves_instrument_compatibility() {
    let cfg = SolverConfig::default();
    let mut r = rng(29);
    for i in 0..20 {
        let d = 2 + i % 2;
        let rep = weyl_rep(d).unwrap();
        let g = random_instrument(&mut r, d, d, 2);
        let (m, e) = g.marginals().unwrap();
        let gw = covariantize_instrument(&g, &rep).unwrap();
        let (mw, ew) = gw.marginals().unwrap();
        let (m_cov, _) = covariantize_obs_pair(&m, &m, &rep).unwrap();
        let e_cov = covariantize_channel(&e, &rep).unwrap();
        for (x, y) in mw.effects().iter().zip(m_cov.effects()) {
            assert!(x.max_abs_diff(y) < 1e-10);
        }
        assert!(ew.choi().max_abs_diff(e_cov.choi()) < 1e-10);
        if i < 4 {
            assert_eq!(
                obs_channel_feasible(&m_cov, &e_cov, &cfg).unwrap().verdict,
                Verdict::Feasible
            );
        }
    }
}

#[test]
fn covariantization_is_idempotent() {
    let mut r = rng(37);
    for d in 2..=4 {
        let rep = weyl_rep(d).unwrap();
        let a = random_povm(&mut r, d, d);
        let b = random_povm(&mut r, d, d);
        let (aw, bw) = covariantize_obs_pair(&a, &b, &rep).unwrap();
        let (aww, bww) = covariantize_obs_pair(&aw, &bw, &rep).unwrap();
        for (x, y) in aw
            .effects()
            .iter()
            .zip(aww.effects())
            .chain(bw.effects().iter().zip(bww.effects()))
        {
            assert!(x.max_abs_diff(y) < 1e-12);
        }
        let e = random_channel(&mut r, d, 2);
        let ew = covariantize_channel(&e, &rep).unwrap();
        assert!(
            covariantize_channel(&ew, &rep)
                .unwrap()
                .choi()
                .max_abs_diff(ew.choi())
                < 1e-12
        );
        // covariant channels are exactly those with a positive-definite kernel
        let k = kernel_of_channel(&ew, &rep).unwrap();
        assert!(
            covariant_channel_from_kernel(&k)
                .unwrap()
                .choi()
                .max_abs_diff(ew.choi())
                < 1e-10
        );
        // the joint observable of a state depends on it only through two diagonals
        let rho = random_state(&mut r, d);
        let g = joint_from_state(&rho, &rep).unwrap();
        let (q, p) = g.marginals();
        let (mu, nu) = state_distributions(&rho, &rep);
        let (qe, pe) = CovariantObsPair::new(mu, nu)
            .unwrap()
            .observables(&rep)
            .unwrap();
        for (x, y) in q
            .effects()
            .iter()
            .zip(qe.effects())
            .chain(p.effects().iter().zip(pe.effects()))
        {
            assert!(x.max_abs_diff(y) < 1e-12);
        }
    }
}

#[test]
fn self_compatible_interval_endpoints() {
    for d in 2..=4 {
        let (lo, hi) = self_compatible_covariant_interval(d).unwrap();
        let df = d as f64;
        assert!((lo - df / (2.0 * (df + 1.0))).abs() < 1e-15);
        assert!((hi - df * df / (df * df - 1.0)).abs() < 1e-15);
        assert!(covariant_mixture(hi, d).is_ok());
        assert!(covariant_mixture(hi + 1e-6, d).is_err());
    }
}
