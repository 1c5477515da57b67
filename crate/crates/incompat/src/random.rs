//! Seeded random devices for property tests and sampled processings.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::devices::{ChannelChoi, Instrument, JointChannel, MarkovKernel, Povm};
use crate::linalg::{partial_trace, CMatrix};

pub use rand::SeedableRng;

pub type DetRng = ChaCha8Rng;

pub fn rng(seed: u64) -> DetRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre(rng: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, |_, _| {
        C64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_vector(rng: &mut impl Rng, d: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| C64::new(normal(rng), normal(rng))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Haar-distributed unitary: Gram–Schmidt on Ginibre columns.
pub fn haar_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    let g = ginibre(rng, d);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for u in &cols {
            let ip: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= ip * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    CMatrix::from_fn(d, |i, j| cols[j][i])
}

/// Density matrix `GG†/tr(GG†)` with Ginibre `G`.
pub fn random_state(rng: &mut impl Rng, d: usize) -> CMatrix {
    let g = ginibre(rng, d);
    let r = g.matmul(&g.adjoint());
    let tr = r.trace().re;
    r.scale(1.0 / tr).hermitian_part()
}

pub fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

fn inverse_sqrt(m: &CMatrix) -> CMatrix {
    m.map_spectrum(|x| 1.0 / x.sqrt())
        .expect("Hermitian by construction")
}

/// `S^{-1/2} X_j S^{-1/2}` with `X_j = G_j G_j†` and `S = Σ X_j`.
pub fn random_povm(rng: &mut impl Rng, d: usize, n: usize) -> Povm {
    let xs: Vec<CMatrix> = (0..n)
        .map(|_| {
            let g = ginibre(rng, d);
            g.matmul(&g.adjoint()).hermitian_part()
        })
        .collect();
    let mut s = CMatrix::zeros(d);
    for x in &xs {
        s += x;
    }
    let r = inverse_sqrt(&s.hermitian_part());
    let effects = xs
        .iter()
        .map(|x| r.matmul(x).matmul(&r).hermitian_part())
        .collect();
    Povm::new(effects).expect("normalised by construction")
}

/// Square Kraus operators normalised so that `Σ K†K = I`.
fn random_kraus(rng: &mut impl Rng, d: usize, rank: usize) -> Vec<CMatrix> {
    let ks: Vec<CMatrix> = (0..rank).map(|_| ginibre(rng, d)).collect();
    let mut s = CMatrix::zeros(d);
    for k in &ks {
        s += &k.adjoint().matmul(k);
    }
    let r = inverse_sqrt(&s.hermitian_part());
    ks.iter().map(|k| k.matmul(&r)).collect()
}

pub fn random_channel(rng: &mut impl Rng, d: usize, rank: usize) -> ChannelChoi {
    ChannelChoi::from_kraus(&random_kraus(rng, d, rank)).expect("trace preserving by construction")
}

/// Each outcome gets its own group of Kraus operators from one normalised set.
pub fn random_instrument(rng: &mut impl Rng, d: usize, outcomes: usize, rank: usize) -> Instrument {
    let ks = random_kraus(rng, d, outcomes * rank);
    let blocks: Vec<CMatrix> = ks
        .chunks(rank)
        .map(|group| {
            crate::devices::choi_from_map(d, d, |x| {
                let mut acc = CMatrix::zeros(d);
                for k in group {
                    acc += &x.conjugate_by(k);
                }
                acc
            })
        })
        .collect();
    Instrument::new(d, d, blocks).expect("trace preserving by construction")
}

/// Joint channel `C^d → C^{k1} ⊗ C^{k2}` from a Haar isometry into
/// `C^{k1} ⊗ C^{k2} ⊗ C^env`, tracing out the environment.
pub fn random_joint_channel(
    rng: &mut impl Rng,
    d: usize,
    k1: usize,
    k2: usize,
    env: usize,
) -> JointChannel {
    let big = k1 * k2 * env;
    assert!(big >= d, "isometry needs k1·k2·env ≥ d");
    let u = haar_unitary(rng, big);
    let ch = ChannelChoi::from_map(d, k1 * k2, |x| {
        let padded = CMatrix::from_fn(big, |i, j| {
            if i < d && j < d {
                x[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        partial_trace(&padded.conjugate_by(&u), &[k1 * k2, env], &[0]).expect("consistent dims")
    })
    .expect("isometric dilation");
    JointChannel::new(ch, k1, k2).expect("output splits as k1·k2")
}

pub fn random_kernel(rng: &mut impl Rng, inputs: usize, outputs: usize) -> MarkovKernel {
    let cols: Vec<Vec<f64>> = (0..inputs)
        .map(|_| random_distribution(rng, outputs))
        .collect();
    MarkovKernel::new(
        (0..outputs)
            .map(|y| cols.iter().map(|c| c[y]).collect())
            .collect(),
    )
    .expect("columns are distributions")
}
