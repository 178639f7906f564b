//! Score-transformation kernels on matching distance.
//!
//! Every kernel is defined in distance form: `d = 0` is a perfect match and
//! values decrease as the distance grows. The convergent kinds give perfect
//! matches a lead of at least `M_TEN` over almost perfect ones, which
//! [`certify_lead`] checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "pow_2")]
    Pow2,
    #[serde(rename = "pow_e")]
    PowE,
    #[serde(rename = "gauss")]
    Gauss,
    #[serde(rename = "bridge")]
    Bridge,
    #[serde(rename = "spliced")]
    Spliced,
    #[serde(rename = "inv_additive_residue")]
    InvAdditiveResidue,
    #[serde(rename = "adj_pow_2")]
    AdjPow2,
    #[serde(rename = "newton")]
    Newton,
    #[serde(rename = "decay_a")]
    DecayA,
    #[serde(rename = "decay_b")]
    DecayB,
}

impl KernelKind {
    pub const ALL: [KernelKind; 10] = [
        KernelKind::Pow2,
        KernelKind::PowE,
        KernelKind::Gauss,
        KernelKind::Bridge,
        KernelKind::Spliced,
        KernelKind::InvAdditiveResidue,
        KernelKind::AdjPow2,
        KernelKind::Newton,
        KernelKind::DecayA,
        KernelKind::DecayB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Pow2 => "pow_2",
            KernelKind::PowE => "pow_e",
            KernelKind::Gauss => "gauss",
            KernelKind::Bridge => "bridge",
            KernelKind::Spliced => "spliced",
            KernelKind::InvAdditiveResidue => "inv_additive_residue",
            KernelKind::AdjPow2 => "adj_pow_2",
            KernelKind::Newton => "newton",
            KernelKind::DecayA => "decay_a",
            KernelKind::DecayB => "decay_b",
        }
    }

    /// Human-readable definition on matching distance `d`.
    pub fn formula(self) -> &'static str {
        match self {
            KernelKind::Pow2 => "2^(-d)",
            KernelKind::PowE => "e^(-d)",
            KernelKind::Gauss => "e^(-d^2)",
            KernelKind::Bridge => "mld^(-d)",
            KernelKind::Spliced => "base(d) for d > 0; mld * base(1) at d = 0 (base pow_2)",
            KernelKind::InvAdditiveResidue => {
                "1/(adrez + grow(d)), adrez = (grow(1)/mld - grow(0))/(1 - 1/mld) (grow 2^d)"
            }
            KernelKind::AdjPow2 => "1/(2^d + adrez), adrez = -(m-2)/(m-1)",
            KernelKind::Newton => "1/(1/m + d^2)",
            KernelKind::DecayA => "mld^(-H(d)), H(d) = sum_{i<=d} 1/i",
            KernelKind::DecayB => "mld^(-Q(d)), Q(d) = sum_{i<=d} 1/i^2",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidKernel(format!("unknown kernel kind `{s}`")))
    }
}

/// Strictly increasing function whose inverse is made convergent by an
/// additive residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrowthFn {
    #[serde(rename = "pow_2")]
    Pow2,
    #[serde(rename = "pow_e")]
    PowE,
    #[serde(rename = "square")]
    Square,
    #[serde(rename = "linear")]
    Linear,
}

impl GrowthFn {
    pub const ALL: [GrowthFn; 4] = [
        GrowthFn::Pow2,
        GrowthFn::PowE,
        GrowthFn::Square,
        GrowthFn::Linear,
    ];

    #[inline]
    pub fn eval(self, d: f64) -> f64 {
        match self {
            GrowthFn::Pow2 => d.exp2(),
            GrowthFn::PowE => d.exp(),
            GrowthFn::Square => d * d,
            GrowthFn::Linear => d,
        }
    }

    /// `eval(d) − eval(0)` without cancellation near 0.
    #[inline]
    pub fn rise(self, d: f64) -> f64 {
        match self {
            GrowthFn::Pow2 if d < 1.0 => (d * std::f64::consts::LN_2).exp_m1(),
            GrowthFn::Pow2 => d.exp2() - 1.0,
            GrowthFn::PowE => d.exp_m1(),
            GrowthFn::Square => d * d,
            GrowthFn::Linear => d,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GrowthFn::Pow2 => "pow_2",
            GrowthFn::PowE => "pow_e",
            GrowthFn::Square => "square",
            GrowthFn::Linear => "linear",
        }
    }
}

impl FromStr for GrowthFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GrowthFn::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidKernel(format!("unknown growth function `{s}`")))
    }
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    kind: KernelKind,
    /// Multiplier lead: the exponential base, the splice factor, or the lead
    /// the additive residue was solved for. Fixed kernels store their
    /// intrinsic ratio `f(0)/f(1)`.
    mld: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adrez: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grow: Option<GrowthFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<Box<Kernel>>,
    total_weight: f64,
    m_ten: usize,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    scale: f64,
}

/// `Σ_{i=1..d} 1/i^p`, linearly interpolated between integers.
fn fading_exponent(d: f64, p: i32) -> f64 {
    let whole = d.floor();
    let n = whole as u64;
    let mut acc = 0.0;
    for i in 1..=n {
        acc += (i as f64).powi(-p);
    }
    acc + (d - whole) * ((n + 1) as f64).powi(-p)
}

fn check_mld(mld: f64) -> Result<f64> {
    if mld.is_finite() && mld > 1.0 {
        Ok(mld)
    } else {
        Err(Error::InvalidKernel(format!(
            "multiplier lead must be a finite real > 1, got {mld}"
        )))
    }
}

/// Builds a kernel of the given kind for a table of `m_ten` rows and the
/// given total attribute weight. The multiplier lead defaults to `m_ten`
/// (at least 2), or `m_ten + 1` for `newton`.
pub fn make_kernel(
    kind: KernelKind,
    m_ten: usize,
    total_weight: f64,
    mld_override: Option<f64>,
) -> Result<Kernel> {
    if m_ten == 0 {
        return Err(Error::InvalidKernel("m_ten must be at least 1".into()));
    }
    if !(total_weight > 0.0 && total_weight.is_finite()) {
        return Err(Error::InvalidKernel(format!(
            "total weight must be positive, got {total_weight}"
        )));
    }
    let mld_override = mld_override.map(check_mld).transpose()?;
    let lead = mld_override.unwrap_or((m_ten.max(2)) as f64);
    let fixed = |kind: KernelKind, ratio: f64| -> Result<Kernel> {
        if mld_override.is_some() {
            return Err(Error::InvalidKernel(format!(
                "{kind} has no multiplier-lead parameter"
            )));
        }
        Ok(Kernel::plain(kind, ratio, total_weight, m_ten))
    };
    match kind {
        KernelKind::Pow2 => fixed(kind, 2.0),
        KernelKind::PowE | KernelKind::Gauss => fixed(kind, std::f64::consts::E),
        KernelKind::Bridge | KernelKind::DecayA | KernelKind::DecayB => {
            Ok(Kernel::plain(kind, lead, total_weight, m_ten))
        }
        KernelKind::Spliced => {
            let base = make_kernel(KernelKind::Pow2, m_ten, total_weight, None)?;
            splice(base, lead)
        }
        KernelKind::InvAdditiveResidue => {
            inverse_additive_residue(GrowthFn::Pow2, lead, m_ten, total_weight)
        }
        KernelKind::AdjPow2 => {
            let mld = match mld_override {
                Some(mld) => mld,
                None if m_ten >= 2 => m_ten as f64,
                None => {
                    return Err(Error::InvalidKernel(
                        "adj_pow_2 needs m_ten >= 2 (its residue divides by m_ten - 1)".into(),
                    ))
                }
            };
            let adrez = -(mld - 2.0) / (mld - 1.0);
            Ok(Kernel {
                adrez: Some(adrez),
                grow: Some(GrowthFn::Pow2),
                ..Kernel::plain(kind, mld, total_weight, m_ten)
            })
        }
        KernelKind::Newton => {
            let (mld, adrez) = match mld_override {
                Some(mld) => (mld, 1.0 / (mld - 1.0)),
                None => ((m_ten + 1) as f64, 1.0 / m_ten as f64),
            };
            Ok(Kernel {
                adrez: Some(adrez),
                grow: Some(GrowthFn::Square),
                ..Kernel::plain(kind, mld, total_weight, m_ten)
            })
        }
    }
}

/// Replaces the perfect-match value of `base` by `mld · base(1)`.
pub fn splice(base: Kernel, mld: f64) -> Result<Kernel> {
    let mld = check_mld(mld)?;
    if base.kind == KernelKind::Spliced {
        return Err(Error::InvalidKernel(
            "cannot splice an already spliced kernel".into(),
        ));
    }
    let base = base.unscaled();
    let peak = mld * base.value(1.0);
    if peak < base.value(0.0) {
        return Err(Error::InvalidKernel(format!(
            "splice lead {mld} leaves the perfect-match value below {}(0)",
            base.kind
        )));
    }
    Ok(Kernel {
        base: Some(Box::new(base.clone())),
        ..Kernel::plain(KernelKind::Spliced, mld, base.total_weight, base.m_ten)
    })
}

/// `d ↦ 1/(adrez + grow(d))`, with the residue chosen so that the kernel's
/// value at 0 is `mld` times its value at 1.
pub fn inverse_additive_residue(
    grow: GrowthFn,
    mld: f64,
    m_ten: usize,
    total_weight: f64,
) -> Result<Kernel> {
    let mld = check_mld(mld)?;
    if m_ten == 0 {
        return Err(Error::InvalidKernel("m_ten must be at least 1".into()));
    }
    if !(total_weight > 0.0 && total_weight.is_finite()) {
        return Err(Error::InvalidKernel(format!(
            "total weight must be positive, got {total_weight}"
        )));
    }
    let adrez = (grow.eval(1.0) / mld - grow.eval(0.0)) / (1.0 - 1.0 / mld);
    // grow is increasing, so the denominator is smallest at d = 0.
    let floor = residue_floor(grow, mld);
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidKernel(
            "residual drives denominator nonpositive".into(),
        ));
    }
    Ok(Kernel {
        adrez: Some(adrez),
        grow: Some(grow),
        ..Kernel::plain(KernelKind::InvAdditiveResidue, mld, total_weight, m_ten)
    })
}

/// `adrez + grow(0)`, the denominator at distance 0, in a form free of
/// cancellation for large leads.
fn residue_floor(grow: GrowthFn, mld: f64) -> f64 {
    grow.rise(1.0) / (mld - 1.0)
}

impl Kernel {
    fn plain(kind: KernelKind, mld: f64, total_weight: f64, m_ten: usize) -> Self {
        Kernel {
            kind,
            mld,
            adrez: None,
            grow: None,
            base: None,
            total_weight,
            m_ten,
            scale: 1.0,
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn mld(&self) -> f64 {
        self.mld
    }

    pub fn adrez(&self) -> Option<f64> {
        self.adrez
    }

    pub fn grow(&self) -> Option<GrowthFn> {
        self.grow
    }

    pub fn base(&self) -> Option<&Kernel> {
        self.base.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn m_ten(&self) -> usize {
        self.m_ten
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The same kernel multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<Kernel> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "scale must be a positive real, got {factor}"
            )));
        }
        Ok(Kernel {
            scale: self.scale * factor,
            ..self.clone()
        })
    }

    fn unscaled(mut self) -> Kernel {
        self.scale = 1.0;
        self
    }

    /// Compact descriptor, e.g. `bridge(mld=10)`.
    pub fn descriptor(&self) -> String {
        let mut s = format!("{}(mld={}", self.kind, self.mld);
        if let Some(a) = self.adrez {
            s.push_str(&format!(", adrez={a}"));
        }
        if let (KernelKind::InvAdditiveResidue, Some(g)) = (self.kind, self.grow) {
            s.push_str(&format!(", grow={}", g.name()));
        }
        if let Some(b) = &self.base {
            s.push_str(&format!(", base={}", b.descriptor()));
        }
        if self.scale != 1.0 {
            s.push_str(&format!(", scale={}", self.scale));
        }
        s.push(')');
        s
    }

    /// Kernel value at distance `d` without domain checks.
    #[inline]
    pub fn value(&self, d: f64) -> f64 {
        let v = match self.kind {
            KernelKind::Pow2 => (-d).exp2(),
            KernelKind::PowE => (-d).exp(),
            KernelKind::Gauss => (-d * d).exp(),
            KernelKind::Bridge => self.mld.powf(-d),
            KernelKind::DecayA => self.mld.powf(-fading_exponent(d, 1)),
            KernelKind::DecayB => self.mld.powf(-fading_exponent(d, 2)),
            KernelKind::InvAdditiveResidue | KernelKind::AdjPow2 | KernelKind::Newton => {
                1.0 / self.residue_denominator(d)
            }
            KernelKind::Spliced => {
                let base = self.base.as_deref().expect("spliced kernel has a base");
                if d == 0.0 {
                    self.mld * base.value(1.0)
                } else {
                    base.value(d)
                }
            }
        };
        v * self.scale
    }

    /// Natural log of [`Kernel::value`]; finite even where the value
    /// underflows.
    pub fn ln_value(&self, d: f64) -> f64 {
        let ln = match self.kind {
            KernelKind::Pow2 => -d * std::f64::consts::LN_2,
            KernelKind::PowE => -d,
            KernelKind::Gauss => -d * d,
            KernelKind::Bridge => -d * self.mld.ln(),
            KernelKind::DecayA => -fading_exponent(d, 1) * self.mld.ln(),
            KernelKind::DecayB => -fading_exponent(d, 2) * self.mld.ln(),
            KernelKind::InvAdditiveResidue | KernelKind::AdjPow2 | KernelKind::Newton => {
                -self.residue_denominator(d).ln()
            }
            KernelKind::Spliced => {
                let base = self.base.as_deref().expect("spliced kernel has a base");
                if d == 0.0 {
                    self.mld.ln() + base.ln_value(1.0)
                } else {
                    base.ln_value(d)
                }
            }
        };
        ln + self.scale.ln()
    }

    /// `adrez + grow(d)`.
    #[inline]
    fn residue_denominator(&self, d: f64) -> f64 {
        let grow = self.grow_fn();
        residue_floor(grow, self.mld) + grow.rise(d)
    }

    fn grow_fn(&self) -> GrowthFn {
        self.grow.unwrap_or(match self.kind {
            KernelKind::Newton => GrowthFn::Square,
            _ => GrowthFn::Pow2,
        })
    }

    /// Kernel value at distance `d ∈ [0, total_weight]`.
    pub fn eval_on_distance(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0 && d <= self.total_weight) {
            return Err(Error::DistanceOutOfRange {
                distance: d,
                max: self.total_weight,
            });
        }
        Ok(self.value(d))
    }

    /// The kernel rebuilt for a table of a different size, keeping its
    /// construction recipe.
    pub fn rebuilt_for(&self, m_ten: usize, total_weight: f64) -> Result<Kernel> {
        let rebuilt = match self.kind {
            KernelKind::Spliced => {
                let base = self.base.as_deref().expect("spliced kernel has a base");
                let base = make_kernel(base.kind, m_ten, total_weight, None)?;
                splice(base, m_ten.max(2) as f64)?
            }
            KernelKind::InvAdditiveResidue => {
                inverse_additive_residue(self.grow_fn(), m_ten.max(2) as f64, m_ten, total_weight)?
            }
            kind => make_kernel(kind, m_ten, total_weight, None)?,
        };
        Ok(Kernel {
            scale: self.scale,
            ..rebuilt
        })
    }
}

/// The perfect-proportion check: one perfect match outweighs `m_ten − 1`
/// almost perfect ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadCertificate {
    /// Kernel value at distance 0.
    pub sepm: f64,
    /// Kernel value at distance 1.
    pub seap: f64,
    /// `(m_ten − 1) · seap`.
    pub maxsap: f64,
    pub certified: bool,
}

pub fn certify_lead(kernel: &Kernel, m_ten: usize) -> LeadCertificate {
    let sepm = kernel.value(0.0);
    let seap = kernel.value(1.0);
    let maxsap = m_ten.saturating_sub(1) as f64 * seap;
    LeadCertificate {
        sepm,
        seap,
        maxsap,
        certified: sepm > maxsap,
    }
}

/// A kernel recipe as named on the command line: a kind, optionally with a
/// splice base (`spliced:pow_e`) or growth function
/// (`inv_additive_residue:square`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelChoice {
    Kind(KernelKind),
    Spliced(KernelKind),
    InvAdditiveResidue(GrowthFn),
}

impl KernelChoice {
    pub fn build(
        self,
        m_ten: usize,
        total_weight: f64,
        mld_override: Option<f64>,
    ) -> Result<Kernel> {
        match self {
            KernelChoice::Kind(kind) => make_kernel(kind, m_ten, total_weight, mld_override),
            KernelChoice::Spliced(base) => {
                let base = make_kernel(base, m_ten, total_weight, None)?;
                splice(base, mld_override.unwrap_or(m_ten.max(2) as f64))
            }
            KernelChoice::InvAdditiveResidue(grow) => inverse_additive_residue(
                grow,
                mld_override.unwrap_or(m_ten.max(2) as f64),
                m_ten,
                total_weight,
            ),
        }
    }
}

impl From<KernelKind> for KernelChoice {
    fn from(kind: KernelKind) -> Self {
        KernelChoice::Kind(kind)
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelChoice::Kind(k) => write!(f, "{k}"),
            KernelChoice::Spliced(KernelKind::Pow2) => f.write_str("spliced"),
            KernelChoice::Spliced(base) => write!(f, "spliced:{base}"),
            KernelChoice::InvAdditiveResidue(GrowthFn::Pow2) => f.write_str("inv_additive_residue"),
            KernelChoice::InvAdditiveResidue(g) => write!(f, "inv_additive_residue:{}", g.name()),
        }
    }
}

impl FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None => Ok(KernelChoice::Kind(s.parse()?)),
            Some(("spliced", base)) => {
                let base: KernelKind = base.parse()?;
                if base == KernelKind::Spliced {
                    return Err(Error::InvalidKernel(
                        "cannot splice an already spliced kernel".into(),
                    ));
                }
                Ok(KernelChoice::Spliced(base))
            }
            Some(("inv_additive_residue", grow)) => {
                Ok(KernelChoice::InvAdditiveResidue(grow.parse()?))
            }
            Some(_) => Err(Error::InvalidKernel(format!("unknown kernel `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn bridge_passes_m_ten_through() {
        let k = make_kernel(KernelKind::Bridge, 10, 4.0, None).unwrap();
        assert_eq!(k.mld(), 10.0);
        assert_eq!(k.eval_on_distance(0.0).unwrap(), 1.0);
        assert!(rel(k.eval_on_distance(2.0).unwrap(), 0.01) < 1e-15);
    }

    #[test]
    fn adj_pow_2_residue() {
        let k = make_kernel(KernelKind::AdjPow2, 5, 4.0, None).unwrap();
        assert_eq!(k.adrez(), Some(-0.75));
        assert!(matches!(
            make_kernel(KernelKind::AdjPow2, 1, 4.0, None),
            Err(Error::InvalidKernel(_))
        ));
    }

    #[test]
    fn mld_override_validation() {
        assert!(make_kernel(KernelKind::Bridge, 10, 4.0, Some(1.0)).is_err());
        assert!(make_kernel(KernelKind::Bridge, 10, 4.0, Some(0.5)).is_err());
        assert_eq!(
            make_kernel(KernelKind::Bridge, 10, 4.0, Some(3.0))
                .unwrap()
                .mld(),
            3.0
        );
        assert!(make_kernel(KernelKind::Pow2, 10, 4.0, Some(3.0)).is_err());
        assert!(make_kernel(KernelKind::Bridge, 0, 4.0, None).is_err());
        assert!(make_kernel(KernelKind::Bridge, 3, 0.0, None).is_err());
    }

    #[test]
    fn newton_example() {
        let k = make_kernel(KernelKind::Newton, 4, 4.0, None).unwrap();
        assert_eq!(k.eval_on_distance(0.0).unwrap(), 4.0);
        assert!(rel(k.eval_on_distance(1.0).unwrap(), 0.8) < 1e-15);
        assert!(k.eval_on_distance(1.0).unwrap() < k.eval_on_distance(0.0).unwrap());
    }

    #[test]
    fn eval_domain() {
        let k = make_kernel(KernelKind::Pow2, 4, 3.0, None).unwrap();
        assert!(matches!(
            k.eval_on_distance(-0.1),
            Err(Error::DistanceOutOfRange { .. })
        ));
        assert!(matches!(
            k.eval_on_distance(3.5),
            Err(Error::DistanceOutOfRange { .. })
        ));
        assert!(k.eval_on_distance(f64::NAN).is_err());
        assert_eq!(k.eval_on_distance(3.0).unwrap(), 0.125);
    }

    #[test]
    fn splice_pow_2() {
        let base = make_kernel(KernelKind::Pow2, 8, 4.0, None).unwrap();
        let k = splice(base, 8.0).unwrap();
        assert_eq!(k.eval_on_distance(0.0).unwrap(), 4.0);
        assert_eq!(k.eval_on_distance(1.0).unwrap(), 0.5);
        let half = k.eval_on_distance(0.5).unwrap();
        assert!(rel(half, 2f64.powf(-0.5)) < 1e-15);
        assert!(half < k.eval_on_distance(0.0).unwrap());
        assert!(certify_lead(&k, 8).certified);
    }

    #[test]
    fn splice_rejects_weak_lead() {
        let base = make_kernel(KernelKind::PowE, 2, 4.0, None).unwrap();
        // 1.5 · e^-1 < 1 = base(0)
        assert!(splice(base.clone(), 1.5).is_err());
        assert!(splice(base, 0.9).is_err());
    }

    #[test]
    fn inverse_residue_examples() {
        let k = inverse_additive_residue(GrowthFn::Pow2, 5.0, 5, 4.0).unwrap();
        // (2/5 − 1)/(1 − 1/5)
        let expected = (2.0 / 5.0 - 1.0) / (1.0 - 1.0 / 5.0);
        assert_eq!(k.adrez().unwrap(), expected);
        assert!(rel(k.adrez().unwrap(), -0.75) < 1e-15);
        assert!(rel(k.value(0.0), 4.0) < 1e-14);
        let c = certify_lead(&k, 5);
        assert!(rel(c.sepm / c.seap, 5.0) < 1e-12);
    }

    #[test]
    fn inverse_residue_reproduces_newton() {
        for m in [2usize, 4, 7, 30] {
            // adrez = 1/(mld − 1) = 1/m when mld = m + 1
            let k = inverse_additive_residue(GrowthFn::Square, (m + 1) as f64, m, 4.0).unwrap();
            let newton = make_kernel(KernelKind::Newton, m, 4.0, None).unwrap();
            for d in 0..=3 {
                let d = d as f64;
                let oracle = 1.0 / (1.0 / m as f64 + d * d);
                assert!(rel(k.value(d), oracle) < 1e-12, "m={m} d={d}");
                assert!(rel(newton.value(d), oracle) < 1e-15, "m={m} d={d}");
            }
        }
    }

    #[test]
    fn certification_examples() {
        let c = certify_lead(
            &make_kernel(KernelKind::Bridge, 100, 4.0, None).unwrap(),
            100,
        );
        assert_eq!(c.sepm, 1.0);
        assert!(rel(c.seap, 0.01) < 1e-15);
        assert!(rel(c.maxsap, 0.99) < 1e-15);
        assert!(c.certified);

        let c = certify_lead(&make_kernel(KernelKind::Pow2, 4, 4.0, None).unwrap(), 4);
        assert_eq!(
            (c.sepm, c.seap, c.maxsap, c.certified),
            (1.0, 0.5, 1.5, false)
        );

        let c = certify_lead(&make_kernel(KernelKind::Newton, 4, 4.0, None).unwrap(), 4);
        assert_eq!(c.sepm, 4.0);
        assert!(rel(c.seap, 0.8) < 1e-15);
        assert!(rel(c.maxsap, 2.4) < 1e-15);
        assert!(c.certified);
        assert!(rel(c.sepm / c.seap, 5.0) < 1e-15);
    }

    #[test]
    fn fading_exponent_values() {
        assert_eq!(fading_exponent(0.0, 1), 0.0);
        assert_eq!(fading_exponent(1.0, 1), 1.0);
        assert_eq!(fading_exponent(2.0, 1), 1.5);
        assert_eq!(fading_exponent(1.5, 1), 1.25);
        assert_eq!(fading_exponent(2.0, 2), 1.25);
        assert_eq!(fading_exponent(0.5, 2), 0.5);
    }

    #[test]
    fn decay_kernels_match_products() {
        // 1 / (mld^(1/1) · mld^(1/2) · mld^(1/3))
        let m = 7.0f64;
        let a = make_kernel(KernelKind::DecayA, 7, 5.0, None).unwrap();
        let b = make_kernel(KernelKind::DecayB, 7, 5.0, None).unwrap();
        let prod_a = 1.0 / (m.powf(1.0) * m.powf(0.5) * m.powf(1.0 / 3.0));
        let prod_b = 1.0 / (m.powf(1.0) * m.powf(0.25) * m.powf(1.0 / 9.0));
        assert!(rel(a.value(3.0), prod_a) < 1e-14);
        assert!(rel(b.value(3.0), prod_b) < 1e-14);
    }

    #[test]
    fn choice_parsing() {
        for s in [
            "bridge",
            "spliced",
            "spliced:pow_e",
            "inv_additive_residue",
            "inv_additive_residue:square",
        ] {
            let c: KernelChoice = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert_eq!(
            "spliced".parse::<KernelChoice>().unwrap(),
            KernelChoice::Kind(KernelKind::Spliced)
        );
        assert!("spliced:spliced".parse::<KernelChoice>().is_err());
        assert!("warp".parse::<KernelChoice>().is_err());
        let k = KernelChoice::Spliced(KernelKind::Bridge)
            .build(10, 3.0, None)
            .unwrap();
        assert_eq!(k.value(0.0), 1.0);
    }

    #[test]
    fn serde_descriptor() {
        let k = make_kernel(KernelKind::AdjPow2, 5, 3.0, None).unwrap();
        let json = serde_json::to_value(&k).unwrap();
        assert_eq!(json["kind"], "adj_pow_2");
        assert_eq!(json["mld"], 5.0);
        assert_eq!(json["adrez"], -0.75);
        let back: Kernel = serde_json::from_value(json).unwrap();
        assert_eq!(back, k);
        let s = make_kernel(KernelKind::Spliced, 5, 3.0, None).unwrap();
        let back: Kernel = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn ln_value_agrees_with_value() {
        for kind in KernelKind::ALL {
            let k = make_kernel(kind, 9, 6.0, None)
                .unwrap()
                .scaled(3.0)
                .unwrap();
            for d in [0.0, 0.3, 1.0, 2.5, 6.0] {
                assert!(
                    (k.ln_value(d) - k.value(d).ln()).abs() < 1e-12,
                    "{kind} d={d}"
                );
            }
        }
        let k = make_kernel(KernelKind::Bridge, 100_000, 100.0, None).unwrap();
        assert_eq!(k.value(100.0), 0.0);
        assert!(k.ln_value(100.0).is_finite());
    }

    fn any_kind() -> impl Strategy<Value = KernelKind> {
        proptest::sample::select(KernelKind::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn kernels_positive_and_decreasing(
            kind in any_kind(),
            m in 2usize..2000,
            tw in 1.0f64..12.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let k = make_kernel(kind, m, tw, None).unwrap();
            let (lo, hi) = if a < b { (a * tw, b * tw) } else { (b * tw, a * tw) };
            let (vlo, vhi) = (k.eval_on_distance(lo).unwrap(), k.eval_on_distance(hi).unwrap());
            prop_assert!(vhi > 0.0);
            prop_assert!(vlo >= vhi);
            if hi - lo > 1e-6 {
                prop_assert!(vlo > vhi, "{kind}: f({lo})={vlo} f({hi})={vhi}");
            }
        }

        #[test]
        fn convergent_kinds_certified(m in 2usize..100_000) {
            let bridge = make_kernel(KernelKind::Bridge, m, 3.0, None).unwrap();
            prop_assert!(certify_lead(&bridge, m).certified);
            let adj = make_kernel(KernelKind::AdjPow2, m, 3.0, None).unwrap();
            let c = certify_lead(&adj, m);
            prop_assert!(c.certified);
            prop_assert!(rel(c.sepm / c.seap, m as f64) < 1e-12);
            for kind in [KernelKind::DecayA, KernelKind::DecayB] {
                let k = make_kernel(kind, m, 3.0, None).unwrap();
                let c = certify_lead(&k, m);
                prop_assert!(c.certified);
                prop_assert!(rel(c.sepm / c.seap, m as f64) < 1e-12);
            }
        }

        #[test]
        fn residue_construction_matches_closed_form(m in 2usize..10_000) {
            let generic = inverse_additive_residue(GrowthFn::Pow2, m as f64, m, 8.0).unwrap();
            let closed = make_kernel(KernelKind::AdjPow2, m, 8.0, None).unwrap();
            let mf = m as f64;
            prop_assert!((generic.adrez().unwrap() + (mf - 2.0) / (mf - 1.0)).abs() < 1e-12);
            for d in 0..=8 {
                // 1/(2^d − (m−2)/(m−1)) rearranged as (m−1)/(1 + (m−1)(2^d − 1))
                let oracle = (mf - 1.0) / (1.0 + (mf - 1.0) * (2f64.powi(d) - 1.0));
                let d = d as f64;
                prop_assert!(rel(generic.value(d), oracle) < 1e-12);
                prop_assert!(rel(closed.value(d), oracle) < 1e-12);
            }
        }
    }
}
