//! System configuration, channel realizations and imperfect CSI models.
//!
//! The transmitter sees an estimate `h_hat` related to the true small-scale
//! channel `h` through `h = sqrt(rho) h_hat + sqrt(1 - rho) e`, where `h_hat`
//! and `e` are independent `CN(0, I)` vectors. Pilot-based (TDD) estimation
//! and codebook feedback (FDD) both map onto this model through their
//! accuracy `rho`.

use alloc::vec::Vec;
#[cfg(not(any(test, feature = "std")))]
use num_traits::Float;
use rand::Rng;

use crate::cmat::{inner, norm, norm_sqr};
use crate::rng::{complex_gaussian, complex_gaussian_vec, substream};
use crate::{Error, Result, UserGrid, C64};

/// Antenna count, cluster layout and per-user large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGeometry {
    antennas: usize,
    alpha: UserGrid<f64>,
}

impl SystemGeometry {
    /// Validates `M >= (N-1)K + 1`, positive gains and descending order
    /// inside every cluster.
    pub fn new(antennas: usize, alpha: UserGrid<f64>) -> Result<Self> {
        let clusters = alpha.clusters();
        let k = alpha.users_per_cluster();
        if antennas == 0 || clusters == 0 || k == 0 {
            return Err(Error::Domain("M, N and K must all be positive"));
        }
        if antennas < (clusters - 1) * k + 1 {
            return Err(Error::InfeasibleGeometry {
                antennas,
                clusters,
                users_per_cluster: k,
            });
        }
        if alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::Domain("large-scale gains must be positive and finite"));
        }
        for n in 0..clusters {
            if alpha.cluster(n).windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::Ordering { cluster: n });
            }
        }
        Ok(Self { antennas, alpha })
    }

    /// The six-user configuration used throughout the reference experiments.
    pub fn table1() -> Self {
        Self::new(6, table1_alpha()).expect("reference configuration is valid")
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn clusters(&self) -> usize {
        self.alpha.clusters()
    }

    pub fn users_per_cluster(&self) -> usize {
        self.alpha.users_per_cluster()
    }

    pub fn total_users(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &UserGrid<f64> {
        &self.alpha
    }

    /// Expected null-space dimension for generic channel estimates.
    pub fn null_dim(&self) -> usize {
        self.antennas - (self.clusters() - 1) * self.users_per_cluster()
    }
}

/// Large-scale gains of the reference configuration (3 clusters x 2 users).
pub fn table1_alpha() -> UserGrid<f64> {
    UserGrid::from_rows(alloc::vec![
        alloc::vec![1.00, 0.10],
        alloc::vec![0.95, 0.20],
        alloc::vec![0.90, 0.15],
    ])
    .expect("rectangular")
}

/// CSI accuracies of the reference configuration.
pub fn table1_rho() -> UserGrid<f64> {
    UserGrid::from_rows(alloc::vec![
        alloc::vec![0.90, 0.70],
        alloc::vec![0.85, 0.75],
        alloc::vec![0.80, 0.80],
    ])
    .expect("rectangular")
}

/// Where the per-user CSI accuracy comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CsiSpec {
    /// Uplink pilots of length `tau` sent with the given per-user powers.
    Tdd {
        tau: usize,
        pilot_power: UserGrid<f64>,
    },
    /// Quantized feedback with the given per-user bit counts.
    Fdd { bits: UserGrid<u32> },
    /// Accuracies given directly.
    Direct { rho: UserGrid<f64> },
}

impl CsiSpec {
    /// Resolves the per-user accuracy for `geometry`.
    pub fn accuracies(&self, geometry: &SystemGeometry) -> Result<UserGrid<f64>> {
        let shape_err = |got: usize| Error::Shape {
            expected: geometry.total_users(),
            got,
        };
        match self {
            CsiSpec::Tdd { tau, pilot_power } => {
                if !pilot_power.same_shape(geometry.alpha()) {
                    return Err(shape_err(pilot_power.len()));
                }
                let users = geometry.total_users();
                if *tau <= users {
                    return Err(Error::PilotOrthogonality { tau: *tau, users });
                }
                let mut out = UserGrid::filled(geometry.clusters(), geometry.users_per_cluster(), 0.0);
                for ((n, k), &p) in pilot_power.indexed() {
                    out[(n, k)] = csi_accuracy_tdd(*tau as f64, p, geometry.alpha()[(n, k)])?;
                }
                Ok(out)
            }
            CsiSpec::Fdd { bits } => {
                if !bits.same_shape(geometry.alpha()) {
                    return Err(shape_err(bits.len()));
                }
                let m = geometry.antennas();
                let mut out = UserGrid::filled(geometry.clusters(), geometry.users_per_cluster(), 0.0);
                for ((n, k), &b) in bits.indexed() {
                    out[(n, k)] = csi_accuracy_fdd(f64::from(b), m)?;
                }
                Ok(out)
            }
            CsiSpec::Direct { rho } => {
                if !rho.same_shape(geometry.alpha()) {
                    return Err(shape_err(rho.len()));
                }
                validate_rho(rho)?;
                Ok(rho.clone())
            }
        }
    }
}

/// Rejects accuracies outside `[0, 1]`.
pub fn validate_rho(rho: &UserGrid<f64>) -> Result<()> {
    if rho.iter().all(|r| (0.0..=1.0).contains(r)) {
        Ok(())
    } else {
        Err(Error::Domain("CSI accuracy must lie in [0, 1]"))
    }
}

/// Accuracy of the MMSE pilot estimate: `tau P alpha / (1 + tau P alpha)`.
pub fn csi_accuracy_tdd(tau: f64, pilot_power: f64, alpha: f64) -> Result<f64> {
    if !(tau > 0.0) || !(alpha > 0.0) {
        return Err(Error::Domain("tau and alpha must be positive"));
    }
    if !(pilot_power >= 0.0) {
        return Err(Error::Domain("pilot power must be non-negative"));
    }
    let snr = tau * pilot_power * alpha;
    Ok(snr / (1.0 + snr))
}

/// Accuracy of `bits`-bit random vector quantization on `m` antennas:
/// `1 - 2^(-B / (M - 1))`. Accepts fractional bit counts.
pub fn csi_accuracy_fdd(bits: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain("quantized feedback needs at least two antennas"));
    }
    if !(bits >= 0.0) {
        return Err(Error::Domain("feedback bits must be non-negative"));
    }
    Ok(1.0 - (-bits / (m as f64 - 1.0)).exp2())
}

/// One Monte Carlo realization of all users' channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// True small-scale channels.
    pub h: UserGrid<Vec<C64>>,
    /// Transmitter-side estimates with unit-variance entries.
    pub h_hat: UserGrid<Vec<C64>>,
    /// Estimation error components.
    pub e: UserGrid<Vec<C64>>,
}

/// Draws `h_hat`, `e` for one user and builds `h` by the forward model.
pub fn draw_user<R: Rng + ?Sized>(rng: &mut R, m: usize, rho: f64) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let h_hat = complex_gaussian_vec(rng, m);
    let e = complex_gaussian_vec(rng, m);
    let a = rho.sqrt();
    let b = (1.0 - rho).sqrt();
    let h = h_hat.iter().zip(&e).map(|(x, y)| x * a + y * b).collect();
    (h, h_hat, e)
}

/// Draws every user's channel for Monte Carlo trial `trial` under `seed`.
///
/// User `(n, k)` uses substream `(seed, trial, flat index)`, so the draw does
/// not depend on which other trials have been evaluated.
pub fn draw_channels(
    geometry: &SystemGeometry,
    rho: &UserGrid<f64>,
    seed: u64,
    trial: u64,
) -> Result<ChannelDraw> {
    if !rho.same_shape(geometry.alpha()) {
        return Err(Error::Shape {
            expected: geometry.total_users(),
            got: rho.len(),
        });
    }
    validate_rho(rho)?;
    let m = geometry.antennas();
    let n_cl = geometry.clusters();
    let k_cl = geometry.users_per_cluster();
    let mut h = Vec::with_capacity(rho.len());
    let mut h_hat = Vec::with_capacity(rho.len());
    let mut e = Vec::with_capacity(rho.len());
    for (i, &r) in rho.iter().enumerate() {
        let mut rng = substream(seed, trial, i as u64);
        let (hh, est, err) = draw_user(&mut rng, m, r);
        h.push(hh);
        h_hat.push(est);
        e.push(err);
    }
    Ok(ChannelDraw {
        h: UserGrid::from_vec(n_cl, k_cl, h)?,
        h_hat: UserGrid::from_vec(n_cl, k_cl, h_hat)?,
        e: UserGrid::from_vec(n_cl, k_cl, e)?,
    })
}

/// Orthonormal pilot rows: the first `users` rows of the scaled `tau`-point
/// DFT matrix. Row `j` is `exp(-2 pi i j t / tau) / sqrt(tau)`.
pub fn pilot_sequences(users: usize, tau: usize) -> Result<Vec<Vec<C64>>> {
    if tau <= users {
        return Err(Error::PilotOrthogonality { tau, users });
    }
    let scale = 1.0 / (tau as f64).sqrt();
    Ok((0..users)
        .map(|j| {
            (0..tau)
                .map(|t| {
                    let phase = -2.0 * core::f64::consts::PI * ((j * t) % tau) as f64 / tau as f64;
                    C64::new(phase.cos(), phase.sin()) * scale
                })
                .collect()
        })
        .collect())
}

/// True channels and normalized pilot-based estimates for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSlot {
    pub h: UserGrid<Vec<C64>>,
    pub h_hat: UserGrid<Vec<C64>>,
}

/// Runs one uplink pilot slot: all users transmit their pilot rows at once,
/// the base station de-spreads with each user's pilot and applies the MMSE
/// scaling, normalized so `h_hat` has unit-variance entries.
pub fn pilot_slot<R: Rng + ?Sized>(
    geometry: &SystemGeometry,
    tau: usize,
    pilot_power: &UserGrid<f64>,
    rng: &mut R,
) -> Result<PilotSlot> {
    let users = geometry.total_users();
    if !pilot_power.same_shape(geometry.alpha()) {
        return Err(Error::Shape {
            expected: users,
            got: pilot_power.len(),
        });
    }
    if pilot_power.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Domain("pilot power must be non-negative"));
    }
    let pilots = pilot_sequences(users, tau)?;
    let m = geometry.antennas();
    let h: Vec<Vec<C64>> = (0..users).map(|_| complex_gaussian_vec(rng, m)).collect();
    let gains: Vec<f64> = geometry
        .alpha()
        .iter()
        .zip(pilot_power.iter())
        .map(|(a, p)| tau as f64 * p * a)
        .collect();

    // Y = sum_u sqrt(tau P_u alpha_u) h_u phi_u + N, an M x tau matrix
    let mut y = alloc::vec![C64::new(0.0, 0.0); m * tau];
    for ant in 0..m {
        for t in 0..tau {
            let mut acc = complex_gaussian(rng);
            for u in 0..users {
                acc += h[u][ant] * pilots[u][t] * gains[u].sqrt();
            }
            y[ant * tau + t] = acc;
        }
    }

    let mut h_hat = Vec::with_capacity(users);
    for u in 0..users {
        // y_u = Y phi_u^H = sqrt(tau P alpha) h_u + n_u with n_u ~ CN(0, I)
        let despread: Vec<C64> = (0..m)
            .map(|ant| inner(&pilots[u], &y[ant * tau..(ant + 1) * tau]))
            .collect();
        let scale = 1.0 / (1.0 + gains[u]).sqrt();
        h_hat.push(despread.iter().map(|z| z * scale).collect());
    }
    let n_cl = geometry.clusters();
    let k_cl = geometry.users_per_cluster();
    Ok(PilotSlot {
        h: UserGrid::from_vec(n_cl, k_cl, h)?,
        h_hat: UserGrid::from_vec(n_cl, k_cl, h_hat)?,
    })
}

/// Result of repeated pilot slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotEstimation {
    /// Estimates of the last simulated slot.
    pub h_hat: UserGrid<Vec<C64>>,
    /// Squared sample correlation between true and estimated entries, per user.
    pub empirical_rho: UserGrid<f64>,
}

/// Simulates `trials` pilot slots and measures the per-user accuracy.
pub fn simulate_pilot_estimation(
    geometry: &SystemGeometry,
    tau: usize,
    pilot_power: &UserGrid<f64>,
    trials: usize,
    seed: u64,
) -> Result<PilotEstimation> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required"));
    }
    let users = geometry.total_users();
    let mut cross = alloc::vec![C64::new(0.0, 0.0); users];
    let mut power_h = alloc::vec![0.0; users];
    let mut power_hat = alloc::vec![0.0; users];
    let mut last = None;
    for t in 0..trials {
        let mut rng = substream(seed, t as u64, crate::rng::AUX_STREAM_BASE);
        let slot = pilot_slot(geometry, tau, pilot_power, &mut rng)?;
        for u in 0..users {
            let h = &slot.h.as_slice()[u];
            let est = &slot.h_hat.as_slice()[u];
            cross[u] += inner(est, h);
            power_h[u] += norm_sqr(h);
            power_hat[u] += norm_sqr(est);
        }
        last = Some(slot.h_hat);
    }
    let rho: Vec<f64> = (0..users)
        .map(|u| cross[u].norm_sqr() / (power_h[u] * power_hat[u]))
        .collect();
    Ok(PilotEstimation {
        h_hat: last.expect("trials > 0"),
        empirical_rho: UserGrid::from_vec(geometry.clusters(), geometry.users_per_cluster(), rho)?,
    })
}

/// Largest codebook accepted by the explicit quantization path.
pub const MAX_CODEBOOK_BITS: u32 = 16;

/// Codebook of `2^bits` independent, isotropically distributed unit vectors.
pub fn random_codebook<R: Rng + ?Sized>(rng: &mut R, m: usize, bits: u32) -> Result<Vec<Vec<C64>>> {
    if bits > MAX_CODEBOOK_BITS {
        return Err(Error::Domain("codebook larger than 2^16 entries"));
    }
    Ok((0..(1usize << bits))
        .map(|_| {
            let v = complex_gaussian_vec(rng, m);
            let s = 1.0 / norm(&v);
            v.into_iter().map(|z| z * s).collect()
        })
        .collect())
}

/// Picks the codeword with the largest `|h^H c|^2`; ties go to the lowest index.
pub fn rvq_quantize<'a>(h: &[C64], codebook: &'a [Vec<C64>]) -> Result<(usize, &'a [C64])> {
    if codebook.is_empty() {
        return Err(Error::Domain("codebook must not be empty"));
    }
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, c) in codebook.iter().enumerate() {
        let v = inner(h, c).norm_sqr();
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    Ok((best, &codebook[best]))
}

/// Mean quantization distortion `1 - |h~^H c*|^2` of random codebooks,
/// a fresh codebook per trial. Compares against `2^(-B/(M-1))`.
pub fn rvq_mean_distortion(m: usize, bits: u32, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required"));
    }
    let mut acc = 0.0;
    for t in 0..trials {
        let mut rng = substream(seed, t as u64, crate::rng::AUX_STREAM_BASE + 1);
        let h = complex_gaussian_vec(&mut rng, m);
        let book = random_codebook(&mut rng, m, bits)?;
        let (_, c) = rvq_quantize(&h, &book)?;
        acc += 1.0 - inner(&h, c).norm_sqr() / norm_sqr(&h);
    }
    Ok(acc / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tdd_accuracy_values() {
        assert_eq!(csi_accuracy_tdd(10.0, 0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(csi_accuracy_tdd(20.0, 5.0, 1.0).unwrap(), 100.0 / 101.0, max_relative = 1e-15);
        assert!(csi_accuracy_tdd(40.0, 5.0, 1.0).unwrap() > csi_accuracy_tdd(20.0, 5.0, 1.0).unwrap());
        assert!(csi_accuracy_tdd(0.0, 1.0, 1.0).is_err());
        assert!(csi_accuracy_tdd(10.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn fdd_accuracy_values() {
        assert_eq!(csi_accuracy_fdd(0.0, 6).unwrap(), 0.0);
        assert_eq!(csi_accuracy_fdd(5.0, 6).unwrap(), 0.5);
        assert_relative_eq!(csi_accuracy_fdd(2.0, 6).unwrap(), 0.242141716744801, max_relative = 1e-13);
        assert!(csi_accuracy_fdd(3.0, 1).is_err());
    }

    #[test]
    fn fdd_halving_of_log_gap() {
        // doubling M - 1 halves -log2(1 - rho)
        let g = |b: f64, m: usize| -(1.0 - csi_accuracy_fdd(b, m).unwrap()).log2();
        assert_relative_eq!(g(8.0, 5), 2.0 * g(8.0, 9), max_relative = 1e-12);
        let mut prev = 0.0;
        for b in 0..60 {
            let r = csi_accuracy_fdd(f64::from(b), 6).unwrap();
            assert!(r >= prev);
            prev = r;
        }
        assert!(prev > 0.999);
    }

    #[test]
    fn geometry_validation() {
        assert!(SystemGeometry::new(6, table1_alpha()).is_ok());
        assert!(matches!(
            SystemGeometry::new(4, table1_alpha()),
            Err(Error::InfeasibleGeometry { .. })
        ));
        let unsorted = UserGrid::from_rows(alloc::vec![alloc::vec![0.1, 1.0]]).unwrap();
        assert_eq!(SystemGeometry::new(2, unsorted), Err(Error::Ordering { cluster: 0 }));
        assert_eq!(SystemGeometry::table1().null_dim(), 2);
    }

    #[test]
    fn rho_outside_unit_interval_is_rejected() {
        let g = SystemGeometry::table1();
        let mut rho = table1_rho();
        rho[(0, 1)] = 1.2;
        assert!(draw_channels(&g, &rho, 1, 0).is_err());
        assert!(CsiSpec::Direct { rho }.accuracies(&g).is_err());
    }

    #[test]
    fn perfect_and_useless_csi_limits() {
        let g = SystemGeometry::table1();
        let ones = UserGrid::filled(3, 2, 1.0);
        let d = draw_channels(&g, &ones, 5, 9).unwrap();
        assert_eq!(d.h, d.h_hat);
        let zeros = UserGrid::filled(3, 2, 0.0);
        let d = draw_channels(&g, &zeros, 5, 9).unwrap();
        assert_eq!(d.h, d.e);
    }

    #[test]
    fn pilot_rows_are_orthonormal() {
        let rows = pilot_sequences(6, 7).unwrap();
        for (i, a) in rows.iter().enumerate() {
            for (j, b) in rows.iter().enumerate() {
                let d = inner(a, b);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d.re - expect).abs() < 1e-12 && d.im.abs() < 1e-12);
            }
        }
        assert_eq!(
            pilot_sequences(6, 6),
            Err(Error::PilotOrthogonality { tau: 6, users: 6 })
        );
    }

    #[test]
    fn tdd_spec_requires_long_pilots() {
        let g = SystemGeometry::table1();
        let spec = CsiSpec::Tdd {
            tau: 6,
            pilot_power: UserGrid::filled(3, 2, 1.0),
        };
        assert!(matches!(spec.accuracies(&g), Err(Error::PilotOrthogonality { .. })));
    }

    #[test]
    fn rvq_edge_cases() {
        let h = alloc::vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(1.0, 0.0)];
        let n = norm(&h);
        let dir: Vec<C64> = h.iter().map(|z| z / n).collect();
        let mut rng = substream(3, 0, 0);
        let mut book = random_codebook(&mut rng, 3, 3).unwrap();
        book[5] = dir;
        let (idx, c) = rvq_quantize(&h, &book).unwrap();
        assert_eq!(idx, 5);
        assert_relative_eq!(inner(&h, c).norm_sqr() / norm_sqr(&h), 1.0, max_relative = 1e-12);
        let single = random_codebook(&mut rng, 3, 0).unwrap();
        assert_eq!(rvq_quantize(&h, &single).unwrap().0, 0);
        assert!(rvq_quantize(&h, &[]).is_err());
        assert!(random_codebook(&mut rng, 3, 17).is_err());
    }
}
