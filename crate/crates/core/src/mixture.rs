//! Laws of weighted sums of independent unit exponentials.
//!
//! `W = sum_i eta_i X_i` with `X_i ~ Exp(1)` has a density that is a signed,
//! unit-sum combination of Erlang densities. With pairwise distinct scales
//! every component is a plain exponential; coincident scales produce
//! higher-order Erlang components, which are carried exactly instead of
//! perturbing the scales apart.

use alloc::vec::Vec;
use core::f64::consts::LN_2;
#[cfg(not(any(test, feature = "std")))]
use num_traits::Float;

use crate::special::{harmonic, scaled_expint_en, EULER_GAMMA};
use crate::{Error, Result};

/// Scales with a relative gap below this are treated as one repeated scale.
pub const TIE_RTOL: f64 = 1e-6;
/// Scales below this are identically-zero terms and dropped.
pub const ZERO_SCALE: f64 = 1e-12;
/// Weights larger than this in magnitude flag a numerically fragile mixture;
/// its expectations are then taken from the Laplace transform instead.
pub const ILL_CONDITIONED_WEIGHT: f64 = 1e6;

/// Positive nodes and weights of the 20-point Gauss-Legendre rule.
const GAUSS_LEGENDRE_20: [(f64, f64); 10] = [
    (0.07652652113349734, 0.15275338713072578),
    (0.2277858511416451, 0.14917298647260366),
    (0.37370608871541955, 0.14209610931838187),
    (0.5108670019508271, 0.13168863844917653),
    (0.636053680726515, 0.11819453196151825),
    (0.7463319064601508, 0.10193011981724026),
    (0.8391169718222188, 0.08327674157670467),
    (0.9122344282513258, 0.06267204833410944),
    (0.9639719272779138, 0.04060142980038622),
    (0.9931285991850949, 0.017614007139153273),
];

/// One term `weight * Erlang(order, scale)` of a mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangComponent {
    /// Mean of each exponential stage.
    pub scale: f64,
    /// Number of stages (1 for a plain exponential).
    pub order: u32,
    pub weight: f64,
}

impl ErlangComponent {
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let r = self.order;
        let z = x / self.scale;
        let log_fact: f64 = (1..r).map(|i| f64::from(i).ln()).sum();
        let log_pdf = f64::from(r - 1) * z.ln() - z - log_fact - self.scale.ln();
        if r == 1 {
            (-z).exp() / self.scale
        } else {
            log_pdf.exp()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = x / self.scale;
        let mut term = 1.0;
        let mut tail = 1.0;
        for j in 1..self.order {
            term *= z / f64::from(j);
            tail += term;
        }
        1.0 - (-z).exp() * tail
    }

    /// `E[ln(1 + scale * G)]` for `G ~ Gamma(order, 1)`, in nats.
    ///
    /// Equals `sum_{j=1}^{order} e^a E_j(a)` with `a = 1 / scale`; for order
    /// one this is `-e^{1/eta} Ei(-1/eta)`.
    pub fn mean_ln1p(&self) -> f64 {
        let a = 1.0 / self.scale;
        (1..=self.order)
            .map(|j| scaled_expint_en(j, a).expect("positive argument"))
            .sum()
    }

    /// `E[ln(scale * G)] + C`, which reduces to `ln(scale)` for order one.
    pub fn shifted_mean_ln(&self) -> f64 {
        self.scale.ln() + harmonic(self.order - 1)
    }
}

/// Density of `sum_i eta_i X_i` as a signed Erlang mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct ErlangMixture {
    pub components: Vec<ErlangComponent>,
    /// Number of input scales folded into an earlier one as ties.
    pub merged_ties: usize,
    pub ill_conditioned: bool,
    scales: Vec<f64>,
}

impl ErlangMixture {
    /// Builds the mixture for the given scales.
    ///
    /// Scales below [`ZERO_SCALE`] are dropped; an empty mixture is the point
    /// mass at zero.
    pub fn from_scales(scales: &[f64]) -> Result<Self> {
        if scales.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Domain("mixture scales must be finite and non-negative"));
        }
        let mut sorted: Vec<f64> = scales.iter().copied().filter(|&s| s >= ZERO_SCALE).collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let kept = sorted.clone();

        // (value, multiplicity)
        let mut groups: Vec<(f64, u32)> = Vec::new();
        let mut merged_ties = 0;
        let mut group_first = f64::NAN;
        for s in sorted {
            match groups.last_mut() {
                Some((sum, m)) if (group_first - s) <= TIE_RTOL * group_first => {
                    *sum += s;
                    *m += 1;
                    merged_ties += 1;
                }
                _ => {
                    groups.push((s, 1));
                    group_first = s;
                }
            }
        }
        for g in &mut groups {
            g.0 /= f64::from(g.1);
        }

        let mut components = Vec::new();
        for (gi, &(eta_g, m_g)) in groups.iter().enumerate() {
            // Laurent coefficients of prod_{h != g} (c_h + d_h u)^{-m_h} at u = 0,
            // where u = 1 + eta_g s
            let mut series = alloc::vec![0.0; m_g as usize];
            series[0] = 1.0;
            for (hi, &(eta_h, m_h)) in groups.iter().enumerate() {
                if hi == gi {
                    continue;
                }
                let c = (eta_g - eta_h) / eta_g;
                let t = (eta_h / eta_g) / c;
                let mut factor = alloc::vec![0.0; m_g as usize];
                let mut coeff = c.powi(-(m_h as i32));
                for (j, f) in factor.iter_mut().enumerate() {
                    *f = coeff;
                    // binom(-m, j+1) / binom(-m, j) = -(m + j) / (j + 1)
                    coeff *= -t * f64::from(m_h + j as u32) / (j as f64 + 1.0);
                }
                let mut next = alloc::vec![0.0; m_g as usize];
                for (i, &a) in series.iter().enumerate() {
                    for (j, &b) in factor.iter().enumerate().take(m_g as usize - i) {
                        next[i + j] += a * b;
                    }
                }
                series = next;
            }
            for (j, &w) in series.iter().enumerate() {
                components.push(ErlangComponent {
                    scale: eta_g,
                    order: m_g - j as u32,
                    weight: w,
                });
            }
        }
        let ill_conditioned = components.iter().any(|c| c.weight.abs() > ILL_CONDITIONED_WEIGHT);
        Ok(Self {
            components,
            merged_ties,
            ill_conditioned,
            scales: kept,
        })
    }

    pub fn is_point_mass(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.pdf(x)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x >= 0.0 { 1.0 } else { 0.0 };
        }
        self.components.iter().map(|c| c.weight * c.cdf(x)).sum()
    }

    /// `E[log2(1 + W)]`.
    pub fn mean_log2_1p(&self) -> f64 {
        let nats: f64 = if self.ill_conditioned {
            // ln(1 + w) = int_0^inf (1 - e^{-ws}) e^{-s} / s ds
            self.transform_integral(|s, l| (1.0 - l) * (-s).exp())
        } else {
            self.components.iter().map(|c| c.weight * c.mean_ln1p()).sum()
        };
        (nats / LN_2).max(0.0)
    }

    /// Laplace transform `E[e^{-sW}] = prod_i (1 + eta_i s)^{-1}`.
    pub fn laplace(&self, s: f64) -> f64 {
        self.scales.iter().map(|e| 1.0 / (1.0 + e * s)).product()
    }

    /// `int_0^inf f(s, L(s)) / s ds`, by Gauss-Legendre panels in `ln s`.
    fn transform_integral(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let total: f64 = self.scales.iter().sum();
        let smallest = self.scales.last().copied().unwrap_or(1.0);
        let lo = (1e-18 / total).ln().min(-41.0);
        let hi = (1e17 / smallest).ln().max(6.7);
        let panels = (hi - lo).ceil() as usize * 2;
        let width = (hi - lo) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let mid = lo + width * (p as f64 + 0.5);
            for (x, w) in GAUSS_LEGENDRE_20 {
                for sign in [-1.0, 1.0] {
                    let s = (mid + sign * x * width / 2.0).exp();
                    acc += w * width / 2.0 * f(s, self.laplace(s));
                }
            }
        }
        acc
    }

    /// `sum_i weight_i ln(scale_i)` generalized to repeated scales; equals
    /// `E[ln W] + C`. Minus infinity for the point mass at zero.
    pub fn weighted_log_scale(&self) -> f64 {
        if self.is_point_mass() {
            return f64::NEG_INFINITY;
        }
        if self.ill_conditioned {
            // ln w = int_0^inf (e^{-s} - e^{-ws}) / s ds
            return EULER_GAMMA + self.transform_integral(|s, l| (-s).exp() - l);
        }
        self.components.iter().map(|c| c.weight * c.shifted_mean_ln()).sum()
    }

    pub fn max_scale(&self) -> f64 {
        self.components.iter().map(|c| c.scale).fold(0.0, f64::max)
    }
}

/// Weights attached to pairwise distinct scales.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights {
    pub weights: Vec<f64>,
    /// Set when the smallest pairwise relative gap is below `1e-3`.
    pub ill_conditioned: bool,
}

/// Pairwise Erlang weights
/// `Xi_i = (-1)^{Q-1} eta_i / prod_l eta_l * prod_{s != i} (1/eta_i - 1/eta_s)^{-1}`,
/// evaluated as `prod_{s != i} eta_i / (eta_i - eta_s)`.
pub fn mixture_weights(scales: &[f64]) -> Result<MixtureWeights> {
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::Domain("scales must be positive and finite"));
    }
    let mut min_gap = f64::INFINITY;
    for (i, &a) in scales.iter().enumerate() {
        for &b in &scales[i + 1..] {
            min_gap = min_gap.min((a - b).abs() / a.max(b));
        }
    }
    if min_gap <= TIE_RTOL {
        return Err(Error::CoincidentScales);
    }
    let weights = scales
        .iter()
        .enumerate()
        .map(|(i, &ei)| {
            scales
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != i)
                .map(|(_, &es)| ei / (ei - es))
                .product()
        })
        .collect();
    Ok(MixtureWeights {
        weights,
        ill_conditioned: min_gap < 1e-3,
    })
}

/// `E[log2(1 + sum_i eta_i X_i)]` in bits.
pub fn avg_log_term(scales: &[f64]) -> Result<f64> {
    Ok(ErlangMixture::from_scales(scales)?.mean_log2_1p())
}
