//! Unitary twirl of channels: every channel averages to `λT + (1−λ)id`.

use crate::devices::ChannelChoi;
use crate::error::{Error, Result};
use crate::linalg::{omega, CMatrix};

/// `⟨Ω|C|Ω⟩/d²` with `|Ω⟩ = Σ|mm⟩`; invariant under the twirl.
pub fn entanglement_fidelity(e: &ChannelChoi) -> Result<f64> {
    let d = square_dim(e)?;
    let c = e.choi();
    let mut acc = 0.0;
    for a in 0..d {
        for b in 0..d {
            acc += c[(a * d + a, b * d + b)].re;
        }
    }
    Ok(acc / (d * d) as f64)
}

fn square_dim(e: &ChannelChoi) -> Result<usize> {
    if e.din() != e.dout() {
        return Err(Error::Dimension(format!(
            "twirl needs a square channel, got {}→{}",
            e.din(),
            e.dout()
        )));
    }
    Ok(e.din())
}

/// `λT + (1−λ)id`, where `T` is the completely depolarising channel. Valid
/// exactly for `0 ≤ λ ≤ d²/(d²−1)`.
pub fn covariant_mixture(lambda: f64, d: usize) -> Result<ChannelChoi> {
    let mut choi = CMatrix::identity(d * d).scale(lambda / d as f64);
    choi.axpy(1.0 - lambda, &omega(d));
    ChannelChoi::new(d, d, choi)
}

/// Haar average of `ρ ↦ U* E(UρU*) U`, computed from the fidelity invariant.
pub fn unitary_twirl_channel(e: &ChannelChoi) -> Result<ChannelChoi> {
    let d = square_dim(e)?;
    let f = entanglement_fidelity(e)?;
    let dd = (d * d) as f64;
    let lambda = dd * (1.0 - f) / (dd - 1.0);
    covariant_mixture(lambda, d)
}

/// The mixtures `λT + (1−λ)id` that are compatible with themselves are
/// exactly those with `λ` in the returned closed interval.
pub fn self_compatible_covariant_interval(d: usize) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::Dimension(format!("need d ≥ 2, got {d}")));
    }
    let d = d as f64;
    Ok((d / (2.0 * (d + 1.0)), d * d / (d * d - 1.0)))
}
