//! Economic-incentive optimal load curve: a three-branch piecewise
//! function of coprocessor load. Positive values pay a reward bonus for
//! low utilization; negative values amplify slashing.
//!
//!   x <  B : A * exp(-((x - B) / B)^2) - C
//!   B..=F  : D + (x - B) * E
//!   x >  F : max(G * (x - H)^2 + I, 0)
//!
//! D and I are not free: `calibrate` derives them from the continuity
//! conditions at the two junctions.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveParams {
    pub a: f64,
    /// Peak / first junction load, in (0, 1).
    pub b: f64,
    pub c: f64,
    /// Derived by `calibrate`: D = A - C.
    pub d: f64,
    pub e: f64,
    /// Second junction, in (B, 1].
    pub f: f64,
    pub g: f64,
    pub h: f64,
    /// Derived by `calibrate` from continuity at F.
    pub i: f64,
    /// Scale applied to positive curve values when paying bonuses.
    pub bonus_gain: f64,
    /// Scale applied to negative curve values when amplifying slashes.
    pub slash_gain: f64,
}

impl Default for CurveParams {
    fn default() -> Self {
        // Calibrated default shape: D and I already satisfy continuity.
        let p = CurveParams {
            a: 1.0,
            b: 0.3,
            c: 0.2,
            d: 0.0,
            e: -1.0,
            f: 0.7,
            g: 6.0,
            h: 0.95,
            i: 0.0,
            bonus_gain: 0.1,
            slash_gain: 1.0,
        };
        calibrate(&p).expect("default curve parameters must calibrate")
    }
}

impl CurveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b < self.f && self.f <= 1.0) {
            return Err(Error::Config(format!(
                "curve junctions must satisfy 0 < B < F <= 1 (got B={}, F={})",
                self.b, self.f
            )));
        }
        Ok(())
    }
}

/// Evaluate the load curve at load `x` in [0, 1].
pub fn load_curve(x: f64, p: &CurveParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "load {x} outside [0,1]"
        )));
    }
    Ok(if x < p.b {
        let z = (x - p.b) / p.b;
        p.a * (-z * z).exp() - p.c
    } else if x <= p.f {
        p.d + (x - p.b) * p.e
    } else {
        (p.g * (x - p.h) * (x - p.h) + p.i).max(0.0)
    })
}

/// Derive D and I from the continuity conditions at B and F.
///
/// Fails when the middle branch is negative at F: the third branch is
/// clamped at 0 there, so no choice of I restores continuity.
pub fn calibrate(p: &CurveParams) -> Result<CurveParams> {
    p.validate()?;
    let d = p.a - p.c;
    let value_at_f = d + (p.f - p.b) * p.e;
    if value_at_f < 0.0 {
        return Err(Error::Calibration(format!(
            "middle branch reaches {value_at_f} at F={}; the clamped third branch \
             cannot match a negative value",
            p.f
        )));
    }
    let i = value_at_f - p.g * (p.f - p.h) * (p.f - p.h);
    Ok(CurveParams { d, i, ..*p })
}

/// Map a curve value at load `x` to a (reward bonus, slash amplifier)
/// pair: positive values pay, negative values amplify slashing. At most
/// one side is ever active.
pub fn incentive_multipliers(x: f64, p: &CurveParams) -> Result<(f64, f64)> {
    let v = load_curve(x, p)?;
    let bonus = v.max(0.0) * p.bonus_gain;
    let amplifier = 1.0 + (-v).max(0.0) * p.slash_gain;
    Ok((bonus, amplifier))
}
