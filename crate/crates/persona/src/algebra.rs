// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pure vector algebra over persona vectors.
//!
//! The composition pipeline is fixed: binning → clip → gate → per-dimension
//! pole selection → normalization → |alpha|-weighted sum. [`compose`] is a
//! pure function of `(coefficients, library, config)`; all arithmetic
//! accumulates in f64 and casts to f32 at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocean::{Dimension, Polarity, TraitPole};
use crate::store::{check_compatibility, compatibility_error, Normalization, VectorLibrary};

/// Signed steering coefficients, one per OCEAN dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

impl CoefficientSet {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Openness => self.openness,
            Dimension::Conscientiousness => self.conscientiousness,
            Dimension::Extraversion => self.extraversion,
            Dimension::Agreeableness => self.agreeableness,
            Dimension::Neuroticism => self.neuroticism,
        }
    }

    pub fn set(&mut self, dimension: Dimension, value: f64) {
        match dimension {
            Dimension::Openness => self.openness = value,
            Dimension::Conscientiousness => self.conscientiousness = value,
            Dimension::Extraversion => self.extraversion = value,
            Dimension::Agreeableness => self.agreeableness = value,
            Dimension::Neuroticism => self.neuroticism = value,
        }
    }

    pub fn with(mut self, dimension: Dimension, value: f64) -> Self {
        self.set(dimension, value);
        self
    }

    /// Apply `f` to every dimension.
    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self;
        for dim in Dimension::ALL {
            out.set(dim, f(self.get(dim)));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        Dimension::ALL.iter().all(|&d| self.get(d) == 0.0)
    }

    /// Parse assignments like `"E=1.0,A=-0.5"`; omitted dimensions stay zero.
    pub fn parse_assignments(text: &str) -> Result<Self> {
        let mut coeffs = CoefficientSet::zero();
        for part in text.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (dim, value) = part.split_once('=').ok_or_else(|| {
                Error::Config(format!("expected `<dim>=<value>`, got `{part}`"))
            })?;
            let dim: Dimension = dim.parse()?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad coefficient `{value}`")))?;
            coeffs.set(dim, value);
        }
        Ok(coeffs)
    }
}

impl std::fmt::Display for CoefficientSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = Dimension::ALL
            .iter()
            .map(|&d| format!("{}={:+.2}", d.code(), self.get(d)))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Coefficient quantization applied before clip and gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    #[default]
    Continuous,
    /// Nearest of {-2, -1.5, ..., +2}, ties toward zero.
    Bins9,
    /// Nearest of {-2, -1, 0, +1, +2}, ties toward zero.
    Bins5,
    /// sign(alpha) when |alpha| >= 0.5, else 0.
    Ternary,
}

/// Composition settings. The defaults are gate threshold 0.5, clip bound 2.0,
/// unit normalization, continuous coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposeConfig {
    pub tau: f64,
    pub alpha_max: f64,
    pub normalization: Normalization,
    pub binning: Binning,
    /// Compatibility mode: weight the high pole of each dimension by the
    /// signed coefficient instead of selecting the pole by sign and weighting
    /// by magnitude.
    pub signed_pole: bool,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig {
            tau: 0.5,
            alpha_max: 2.0,
            normalization: Normalization::Unit,
            binning: Binning::Continuous,
            signed_pole: false,
        }
    }
}

impl ComposeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau < 0.0 {
            return Err(Error::Config("tau must be >= 0".into()));
        }
        if self.alpha_max <= 0.0 {
            return Err(Error::Config("alpha_max must be > 0".into()));
        }
        if self.tau >= self.alpha_max {
            return Err(Error::Config(format!(
                "tau ({}) must be below alpha_max ({})",
                self.tau, self.alpha_max
            )));
        }
        Ok(())
    }
}

/// A composed steering vector plus the per-pole weights that built it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeVector {
    pub vector: Vec<f32>,
    /// `(pole, weight)` pairs; weights are |alpha| in the default mode and
    /// signed alpha in `signed_pole` mode.
    pub contributions: Vec<(TraitPole, f64)>,
    /// Steering layer shared with the source library.
    pub layer: usize,
}

impl CompositeVector {
    pub fn is_zero(&self) -> bool {
        self.vector.iter().all(|&v| v == 0.0)
    }

    /// Single-layer steering spec that injects this composite.
    pub fn steering_spec(&self) -> crate::gateway::SteeringSpec {
        crate::gateway::SteeringSpec::single(self.layer, self.vector.clone())
    }
}

/// Clamp every coefficient into `[-alpha_max, +alpha_max]`. Idempotent.
pub fn clip(coeffs: CoefficientSet, alpha_max: f64) -> CoefficientSet {
    coeffs.map(|a| a.clamp(-alpha_max, alpha_max))
}

/// Zero every coefficient with `|alpha| < tau`; `|alpha| == tau` is retained.
/// Idempotent.
pub fn gate(coeffs: CoefficientSet, tau: f64) -> CoefficientSet {
    coeffs.map(|a| if a.abs() < tau { 0.0 } else { a })
}

/// Quantize coefficients per the binning mode.
pub fn bin(coeffs: CoefficientSet, binning: Binning) -> CoefficientSet {
    match binning {
        Binning::Continuous => coeffs,
        Binning::Bins9 => coeffs.map(|a| nearest_level(a, &LEVELS_9)),
        Binning::Bins5 => coeffs.map(|a| nearest_level(a, &LEVELS_5)),
        Binning::Ternary => coeffs.map(|a| {
            if a.abs() >= 0.5 {
                if a >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        }),
    }
}

const LEVELS_9: [f64; 9] = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];
const LEVELS_5: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

fn nearest_level(alpha: f64, levels: &[f64]) -> f64 {
    let mut best = levels[0];
    let mut best_dist = (alpha - best).abs();
    for &level in &levels[1..] {
        let dist = (alpha - level).abs();
        // Strictly closer wins; exact ties resolve toward zero.
        if dist < best_dist || (dist == best_dist && level.abs() < best.abs()) {
            best = level;
            best_dist = dist;
        }
    }
    best
}

/// Pole selected by the sign of `alpha`: non-negative picks the high pole.
///
/// `alpha` is expected to be finite; a zero coefficient selects the high pole
/// but always carries weight zero.
pub fn select_pole(dimension: Dimension, alpha: f64) -> TraitPole {
    if alpha >= 0.0 {
        dimension.pole(Polarity::High)
    } else {
        dimension.pole(Polarity::Low)
    }
}

/// Normalize per the scheme: `Unit` divides by the L2 norm, `Raw` is identity.
pub fn normalize(vector: &[f32], scheme: Normalization) -> Result<Vec<f32>> {
    match scheme {
        Normalization::Raw => Ok(vector.to_vec()),
        Normalization::Unit => {
            let norm = vector
                .iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroNorm);
            }
            Ok(vector.iter().map(|&v| (f64::from(v) / norm) as f32).collect())
        }
    }
}

/// `c * v`, element-wise in f64.
pub fn scale(vector: &[f32], c: f64) -> Vec<f32> {
    vector.iter().map(|&v| (f64::from(v) * c) as f32).collect()
}

/// `a + b`, element-wise in f64.
pub fn add(a: &[f32], b: &[f32]) -> Result<Vec<f32>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (f64::from(x) + f64::from(y)) as f32)
        .collect())
}

/// `a - b`, element-wise in f64.
pub fn subtract(a: &[f32], b: &[f32]) -> Result<Vec<f32>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)) as f32)
        .collect())
}

/// Run the full composition pipeline against a complete library.
///
/// All-zero coefficients (before or after gating) yield a zero vector with an
/// empty contribution list.
pub fn compose(
    coeffs: CoefficientSet,
    library: &VectorLibrary,
    config: &ComposeConfig,
) -> Result<CompositeVector> {
    config.validate()?;
    if !library.is_complete() {
        return Err(Error::IncompatibleLibrary(format!(
            "library holds {} of 10 poles",
            library.len()
        )));
    }
    let dim = library
        .hidden_dim()
        .ok_or_else(|| Error::IncompatibleLibrary("library is empty".into()))?;

    let gated = gate(clip(bin(coeffs, config.binning), config.alpha_max), config.tau);

    let mut acc = vec![0.0f64; dim];
    let mut contributions = Vec::new();
    for dimension in Dimension::ALL {
        let alpha = gated.get(dimension);
        if alpha == 0.0 {
            continue;
        }
        let (pole, weight) = if config.signed_pole {
            (dimension.pole(Polarity::High), alpha)
        } else {
            (select_pole(dimension, alpha), alpha.abs())
        };
        let source = library.require(pole)?;
        let normalized = normalize(&source.vector, config.normalization)?;
        for (a, &v) in acc.iter_mut().zip(normalized.iter()) {
            *a += weight * f64::from(v);
        }
        contributions.push((pole, weight));
    }

    Ok(CompositeVector {
        vector: acc.into_iter().map(|v| v as f32).collect(),
        contributions,
        layer: library.layer,
    })
}

/// Compose after checking the library against a model descriptor.
pub fn compose_for_model(
    coeffs: CoefficientSet,
    library: &VectorLibrary,
    config: &ComposeConfig,
    descriptor: &crate::gateway::ModelDescriptor,
) -> Result<CompositeVector> {
    check_compatibility(library, descriptor).map_err(|m| compatibility_error(&m))?;
    compose(coeffs, library, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{ExtractionMeta, PersonaVector};
    use proptest::prelude::*;

    pub(crate) fn test_library(dim: usize) -> VectorLibrary {
        let mut lib = VectorLibrary::new("m", 1);
        for (i, pole) in TraitPole::ALL.into_iter().enumerate() {
            // Distinct, non-degenerate directions per pole.
            let vector: Vec<f32> = (0..dim)
                .map(|j| ((i * dim + j) as f32 * 0.37 + 0.1).sin() + 0.01 * i as f32)
                .collect();
            lib.insert(PersonaVector {
                pole,
                layer: 1,
                vector,
                model_id: "m".into(),
                normalization: Normalization::Raw,
                created_from: ExtractionMeta::default(),
            })
            .unwrap();
        }
        lib
    }

    #[test]
    fn clip_bounds_both_signs() {
        let c = CoefficientSet::zero()
            .with(Dimension::Openness, 3.0)
            .with(Dimension::Extraversion, -5.0);
        let clipped = clip(c, 2.0);
        assert_eq!(clipped.openness, 2.0);
        assert_eq!(clipped.extraversion, -2.0);
        assert_eq!(clip(clipped, 2.0), clipped, "idempotent");
    }

    #[test]
    fn gate_zeroes_below_threshold_and_retains_boundary() {
        let c = CoefficientSet::zero()
            .with(Dimension::Agreeableness, 0.3)
            .with(Dimension::Neuroticism, -1.0);
        let gated = gate(c, 0.5);
        assert_eq!(gated.agreeableness, 0.0);
        assert_eq!(gated.neuroticism, -1.0);

        let boundary = CoefficientSet::zero().with(Dimension::Agreeableness, 0.5);
        assert_eq!(gate(boundary, 0.5).agreeableness, 0.5, "|alpha| == tau is kept");
        assert_eq!(gate(gated, 0.5), gated, "idempotent");
    }

    #[test]
    fn pole_selection_follows_sign() {
        assert_eq!(select_pole(Dimension::Extraversion, 1.0), TraitPole::Outgoing);
        assert_eq!(
            select_pole(Dimension::Agreeableness, -1.2),
            TraitPole::SelfInterested
        );
        assert_eq!(
            select_pole(Dimension::Conscientiousness, 0.0),
            TraitPole::Dependable
        );
    }

    #[test]
    fn normalize_unit_and_raw() {
        let unit = normalize(&[3.0, 4.0], Normalization::Unit).unwrap();
        assert!((unit[0] - 0.6).abs() < 1e-7);
        assert!((unit[1] - 0.8).abs() < 1e-7);
        let raw = normalize(&[3.0, 4.0], Normalization::Raw).unwrap();
        assert_eq!(raw, vec![3.0, 4.0]);
        assert!(matches!(
            normalize(&[0.0, 0.0], Normalization::Unit),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn subtract_is_add_of_negation() {
        let a = [1.5f32, -2.0, 0.25];
        let b = [0.5f32, 1.0, -0.75];
        assert_eq!(
            subtract(&a, &b).unwrap(),
            add(&a, &scale(&b, -1.0)).unwrap()
        );
        assert_eq!(scale(&a, 0.0), vec![0.0, 0.0, 0.0]);
        assert!(matches!(
            add(&a, &[1.0]),
            Err(Error::LengthMismatch { left: 3, right: 1 })
        ));
    }

    #[test]
    fn add_then_subtract_recovers_input() {
        let lib = test_library(8);
        let outgoing = &lib.get(TraitPole::Outgoing).unwrap().vector;
        let compassionate = &lib.get(TraitPole::Compassionate).unwrap().vector;
        let sum = add(outgoing, compassionate).unwrap();
        let back = subtract(&sum, compassionate).unwrap();
        for (x, y) in back.iter().zip(outgoing.iter()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn compose_single_dimension_uses_normalized_pole() {
        let lib = test_library(8);
        let coeffs = CoefficientSet::zero().with(Dimension::Extraversion, 1.0);
        let comp = compose(coeffs, &lib, &ComposeConfig::default()).unwrap();
        assert_eq!(comp.contributions, vec![(TraitPole::Outgoing, 1.0)]);
        let expected =
            normalize(&lib.get(TraitPole::Outgoing).unwrap().vector, Normalization::Unit).unwrap();
        for (a, b) in comp.vector.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn compose_gates_out_subthreshold_dimensions() {
        let lib = test_library(8);
        let coeffs = CoefficientSet::zero()
            .with(Dimension::Extraversion, 0.3)
            .with(Dimension::Conscientiousness, 0.6);
        let comp = compose(coeffs, &lib, &ComposeConfig::default()).unwrap();
        assert_eq!(comp.contributions, vec![(TraitPole::Dependable, 0.6)]);
    }

    #[test]
    fn compose_trait_conflict_case() {
        let lib = test_library(8);
        let coeffs = CoefficientSet::zero()
            .with(Dimension::Conscientiousness, 1.0)
            .with(Dimension::Extraversion, -1.0)
            .with(Dimension::Agreeableness, -0.5);
        let comp = compose(coeffs, &lib, &ComposeConfig::default()).unwrap();
        assert_eq!(
            comp.contributions,
            vec![
                (TraitPole::Dependable, 1.0),
                (TraitPole::Solitary, 1.0),
                (TraitPole::SelfInterested, 0.5),
            ]
        );

        let signed = compose(
            coeffs,
            &lib,
            &ComposeConfig {
                signed_pole: true,
                ..ComposeConfig::default()
            },
        )
        .unwrap();
        assert_eq!(
            signed.contributions,
            vec![
                (TraitPole::Dependable, 1.0),
                (TraitPole::Outgoing, -1.0),
                (TraitPole::Compassionate, -0.5),
            ]
        );
    }

    #[test]
    fn compose_zero_coefficients_yield_zero_vector() {
        let lib = test_library(8);
        let comp = compose(CoefficientSet::zero(), &lib, &ComposeConfig::default()).unwrap();
        assert!(comp.is_zero());
        assert!(comp.vector.iter().all(|&v| v == 0.0));
        assert_eq!(comp.vector.len(), 8);
    }

    #[test]
    fn compose_rejects_incomplete_library() {
        let mut lib = VectorLibrary::new("m", 1);
        lib.insert(PersonaVector {
            pole: TraitPole::Outgoing,
            layer: 1,
            vector: vec![1.0, 0.0],
            model_id: "m".into(),
            normalization: Normalization::Raw,
            created_from: ExtractionMeta::default(),
        })
        .unwrap();
        let coeffs = CoefficientSet::zero().with(Dimension::Extraversion, 1.0);
        assert!(matches!(
            compose(coeffs, &lib, &ComposeConfig::default()),
            Err(Error::IncompatibleLibrary(_))
        ));
    }

    #[test]
    fn binning_modes_map_to_documented_levels() {
        let c = |v: f64| CoefficientSet::zero().with(Dimension::Openness, v);
        assert_eq!(bin(c(0.4), Binning::Ternary).openness, 0.0);
        assert_eq!(bin(c(0.5), Binning::Ternary).openness, 1.0);
        assert_eq!(bin(c(-0.7), Binning::Ternary).openness, -1.0);
        assert_eq!(bin(c(0.6), Binning::Bins9).openness, 0.5);
        assert_eq!(bin(c(0.25), Binning::Bins9).openness, 0.0, "tie toward zero");
        assert_eq!(bin(c(-1.3), Binning::Bins5).openness, -1.0);
        assert_eq!(bin(c(0.5), Binning::Bins5).openness, 0.0, "tie toward zero");
        assert_eq!(bin(c(3.1), Binning::Bins5).openness, 2.0);
        assert_eq!(bin(c(0.37), Binning::Continuous).openness, 0.37);
    }

    #[test]
    fn tau_must_stay_below_alpha_max() {
        let bad = ComposeConfig {
            tau: 2.0,
            alpha_max: 2.0,
            ..ComposeConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn coefficient_assignments_parse() {
        let c = CoefficientSet::parse_assignments("E=1.0, A=-0.5").unwrap();
        assert_eq!(c.extraversion, 1.0);
        assert_eq!(c.agreeableness, -0.5);
        assert_eq!(c.openness, 0.0);
        assert!(CoefficientSet::parse_assignments("X=1").is_err());
    }

    fn coeff_strategy(range: std::ops::RangeInclusive<f64>) -> impl Strategy<Value = CoefficientSet> {
        let r = range.clone();
        proptest::collection::vec(r, 5).prop_map(|v| CoefficientSet {
            openness: v[0],
            conscientiousness: v[1],
            extraversion: v[2],
            agreeableness: v[3],
            neuroticism: v[4],
        })
    }

    proptest! {
        #[test]
        fn clip_and_gate_are_idempotent(c in coeff_strategy(-5.0..=5.0)) {
            let clipped = clip(c, 2.0);
            prop_assert_eq!(clip(clipped, 2.0), clipped);
            let gated = gate(c, 0.5);
            prop_assert_eq!(gate(gated, 0.5), gated);
        }

        #[test]
        fn clip_and_gate_commute(c in coeff_strategy(-5.0..=5.0)) {
            // Holds whenever tau <= alpha_max.
            prop_assert_eq!(gate(clip(c, 2.0), 0.5), clip(gate(c, 0.5), 2.0));
        }

        #[test]
        fn gate_monotonicity(c in coeff_strategy(-2.0..=2.0), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let active = |cc: CoefficientSet| -> Vec<Dimension> {
                Dimension::ALL.iter().copied().filter(|&d| cc.get(d) != 0.0).collect()
            };
            let at_hi = active(gate(c, hi));
            let at_lo = active(gate(c, lo));
            for d in at_hi {
                prop_assert!(at_lo.contains(&d), "raising tau must not add dimensions");
            }
        }

        #[test]
        fn positive_homogeneity_when_unclipped_and_ungated(
            c in coeff_strategy(0.5..=2.0),
            factor in 0.26f64..=1.0,
        ) {
            // Scale so both the original and scaled sets stay >= tau and <= alpha_max.
            prop_assume!(Dimension::ALL.iter().all(|&d| (c.get(d) * factor).abs() >= 0.5));
            let lib = test_library(8);
            let cfg = ComposeConfig::default();
            let scaled = compose(c.map(|a| a * factor), &lib, &cfg).unwrap();
            let unscaled = compose(c, &lib, &cfg).unwrap();
            for (s, u) in scaled.vector.iter().zip(unscaled.vector.iter()) {
                prop_assert!((f64::from(*s) - factor * f64::from(*u)).abs() < 1e-6);
            }
        }

        #[test]
        fn additivity_over_disjoint_dimensions(
            a in -2.0f64..=2.0,
            b in -2.0f64..=2.0,
        ) {
            let lib = test_library(8);
            let cfg = ComposeConfig::default();
            let c1 = CoefficientSet::zero().with(Dimension::Extraversion, a);
            let c2 = CoefficientSet::zero().with(Dimension::Neuroticism, b);
            let joint = CoefficientSet::zero()
                .with(Dimension::Extraversion, a)
                .with(Dimension::Neuroticism, b);
            let lhs = compose(joint, &lib, &cfg).unwrap();
            let r1 = compose(c1, &lib, &cfg).unwrap();
            let r2 = compose(c2, &lib, &cfg).unwrap();
            let rhs = add(&r1.vector, &r2.vector).unwrap();
            for (x, y) in lhs.vector.iter().zip(rhs.iter()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
