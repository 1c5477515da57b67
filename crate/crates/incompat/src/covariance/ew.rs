//! Eggeling–Werner operators on `C^d ⊗ C^d ⊗ C^d` and the fully covariant
//! joint channels they parametrise.
//!
//! Joint-channel operators here use the dual Choi convention
//! `M(F) = (F*⊗id)(Ω)` on input ⊗ output₁ ⊗ output₂; convert with
//! [`ChannelChoi::from_dual_choi`].

use num_complex::Complex64 as C64;

use crate::devices::{choi_from_map, ChannelChoi, JointChannel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, kron, partial_transpose, swap, CMatrix};

/// Permutation operator with `V(a₀⊗a₁⊗a₂) = b₀⊗b₁⊗b₂`, `b_i = a_{π⁻¹(i)}`.
pub fn perm_op(d: usize, pi: [usize; 3]) -> CMatrix {
    let mut inv = [0; 3];
    for (i, &p) in pi.iter().enumerate() {
        inv[p] = i;
    }
    let n = d * d * d;
    let mut v = CMatrix::zeros(n);
    for idx in 0..n {
        let a = [idx / (d * d), (idx / d) % d, idx % d];
        let b = [a[inv[0]], a[inv[1]], a[inv[2]]];
        v[((b[0] * d + b[1]) * d + b[2], idx)] = C64::new(1.0, 0.0);
    }
    v
}

/// The six permutations in the order `e, (12), (13), (23), (123), (132)`.
pub const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 0, 2],
    [2, 1, 0],
    [0, 2, 1],
    [2, 0, 1],
    [1, 2, 0],
];

#[derive(Clone, Debug)]
pub struct EwBasis {
    pub d: usize,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
    pub s0: CMatrix,
    pub s1: CMatrix,
    pub s2: CMatrix,
    pub s3: CMatrix,
    /// `V_π^Γ` in the order of [`PERMUTATIONS`].
    pub v_gamma: Vec<CMatrix>,
}

pub fn ew_basis(d: usize) -> Result<EwBasis> {
    if d < 2 {
        return Err(Error::Dimension(format!("need d ≥ 2, got {d}")));
    }
    let dims = [d, d, d];
    let v: Vec<CMatrix> = PERMUTATIONS
        .iter()
        .map(|&pi| partial_transpose(&perm_op(d, pi), &dims, &[1, 2]).expect("cubic dims"))
        .collect();
    let [e, v12, v13, v23, v123, v132] = [&v[0], &v[1], &v[2], &v[3], &v[4], &v[5]];
    let df = d as f64;
    let lin = |terms: &[(f64, &CMatrix)]| {
        let mut acc = CMatrix::zeros(d * d * d);
        for (c, m) in terms {
            acc.axpy(*c, m);
        }
        acc
    };
    let p = 1.0 / (df + 1.0);
    let s_plus = lin(&[
        (0.5, e),
        (0.5, v23),
        (-0.5 * p, v12),
        (-0.5 * p, v13),
        (-0.5 * p, v123),
        (-0.5 * p, v132),
    ]);
    let m = 1.0 / (df - 1.0);
    let s_minus = lin(&[
        (0.5, e),
        (-0.5, v23),
        (-0.5 * m, v12),
        (-0.5 * m, v13),
        (0.5 * m, v123),
        (0.5 * m, v132),
    ]);
    let q = 1.0 / (df * df - 1.0);
    let s0 = lin(&[(df * q, v12), (df * q, v13), (-q, v123), (-q, v132)]);
    let s1 = lin(&[(df * q, v123), (df * q, v132), (-q, v12), (-q, v13)]);
    let r = q.sqrt();
    let s2 = lin(&[(r, v12), (-r, v13)]);
    let s3 = lin(&[(r, v123), (-r, v132)]).scale_c(C64::new(0.0, 1.0));
    Ok(EwBasis {
        d,
        s_plus,
        s_minus,
        s0,
        s1,
        s2,
        s3,
        v_gamma: v,
    })
}

/// `2/((d−1)(d+2)) t₊S₊ + 2/((d+1)(d−2)) t₋S₋ + ½(t₀S₀ + t₁S₁)`; the `S₋`
/// term is absent for `d = 2`.
pub fn ew_tetrahedron_point(
    t_plus: f64,
    t_minus: f64,
    t0: f64,
    t1: f64,
    d: usize,
) -> Result<CMatrix> {
    const TOL: f64 = 1e-12;
    if t_plus < -TOL
        || t_minus < -TOL
        || t0 < -TOL
        || (t_plus + t_minus + t0 - 1.0).abs() > TOL
        || t1.abs() > t0 + TOL
    {
        return Err(Error::ConstraintViolation(format!(
            "({t_plus}, {t_minus}, {t0}, {t1}) is outside the tetrahedron"
        )));
    }
    if d == 2 && t_minus.abs() > TOL {
        return Err(Error::ConstraintViolation(
            "S₋ vanishes for d = 2, so t₋ must be 0".into(),
        ));
    }
    let b = ew_basis(d)?;
    let df = d as f64;
    let mut m = b.s_plus.scale(2.0 * t_plus / ((df - 1.0) * (df + 2.0)));
    if d > 2 {
        m.axpy(2.0 * t_minus / ((df + 1.0) * (df - 2.0)), &b.s_minus);
    }
    m.axpy(0.5 * t0, &b.s0);
    m.axpy(0.5 * t1, &b.s1);
    Ok(m)
}

/// Joint channel `C^d → C^d ⊗ C^d` from a dual-convention operator.
pub fn ew_joint_channel(m: &CMatrix, d: usize) -> Result<JointChannel> {
    JointChannel::new(ChannelChoi::from_dual_choi(d, d * d, m)?, d, d)
}

/// Hilbert–Schmidt orthogonal projection onto `span{V_π^Γ}`. On dual Choi
/// operators this is the twirl onto fully covariant joint channels.
pub fn ew_project(m: &CMatrix, d: usize) -> Result<CMatrix> {
    if m.dim() != d * d * d {
        return Err(Error::Dimension(format!(
            "expected a {}-dimensional operator",
            d * d * d
        )));
    }
    let b = ew_basis(d)?;
    let k = b.v_gamma.len();
    let gram = CMatrix::from_fn(k, |i, j| b.v_gamma[i].hs(&b.v_gamma[j]));
    let rhs: Vec<C64> = b.v_gamma.iter().map(|v| v.hs(m)).collect();
    // the six operators are linearly dependent for d = 2
    let eig = hermitian_eig(&gram.hermitian_part())?;
    let cut = 1e-9 * eig.eigenvalues.last().copied().unwrap_or(1.0);
    let pinv = eig.rebuild(|x| if x > cut { 1.0 / x } else { 0.0 });
    let coeffs = pinv.apply(&rhs);
    let mut out = CMatrix::zeros(m.dim());
    for (c, v) in coeffs.iter().zip(&b.v_gamma) {
        out.axpy_c(*c, v);
    }
    Ok(out)
}

/// `ρ ↦ 2/(d+1) S₊(ρ⊗I)S₊` with `S₊` the projection onto the symmetric
/// subspace: the optimal symmetric universal 1→2 cloner.
pub fn cloner(d: usize) -> Result<JointChannel> {
    let dd = d * d;
    let sym = (&CMatrix::identity(dd) + &swap(d)).scale(0.5);
    let choi = choi_from_map(d, dd, |x| {
        kron(x, &CMatrix::identity(d))
            .conjugate_by(&sym)
            .scale(2.0 / (d as f64 + 1.0))
    });
    JointChannel::new(ChannelChoi::new(d, dd, choi)?, d, d)
}
