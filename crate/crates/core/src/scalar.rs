//! Floating-point scalars the integrator and models are generic over.
//!
//! `f32` and `f64` are always available. With the `extended` feature a
//! double-double type (about 106 significand bits) is exported as [`Extended`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[cfg(feature = "extended")]
pub use twofloat::TwoFloat as Extended;

/// Named floating-point formats selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
    /// Double-double; only usable when built with the `extended` feature.
    Big,
}

impl Precision {
    pub const ALL: [Precision; 3] = [Precision::F32, Precision::F64, Precision::Big];

    pub fn tag(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
            Precision::Big => "big",
        }
    }

    /// Whether this build can run computations at this precision.
    pub fn is_available(self) -> bool {
        match self {
            Precision::Big => cfg!(feature = "extended"),
            _ => true,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            "big" | "extended" => Ok(Precision::Big),
            other => Err(format!("unknown precision `{other}` (expected f32, f64, big)")),
        }
    }
}

/// Real scalar usable by every numerical kernel in this crate.
pub trait Scalar: Float + fmt::Debug + Send + Sync + 'static {
    const PRECISION: Precision;

    /// Unit roundoff of the format (half the spacing of floats at 1 is not
    /// used; this is the gap between 1 and the next representable value).
    fn unit_roundoff() -> f64;

    /// Correctly rounded conversion of an exact rational.
    fn from_rational(r: &BigRational) -> Self;

    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Decimal text that parses back to the same value.
    fn to_round_trip_string(self) -> String;

    /// `e^x` accurate to the working precision.
    fn exp_p(self) -> Self {
        self.exp()
    }

    /// Natural logarithm accurate to the working precision.
    fn ln_p(self) -> Self {
        self.ln()
    }

    /// Quotient accurate to the working precision.
    fn div_p(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Scalar for f32 {
    const PRECISION: Precision = Precision::F32;

    fn unit_roundoff() -> f64 {
        f32::EPSILON as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r) as f32
    }

    fn lit(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    fn to_round_trip_string(self) -> String {
        format!("{self:?}")
    }
}

impl Scalar for f64 {
    const PRECISION: Precision = Precision::F64;

    fn unit_roundoff() -> f64 {
        f64::EPSILON
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }

    fn lit(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn to_round_trip_string(self) -> String {
        format!("{self:?}")
    }
}

#[cfg(feature = "extended")]
impl Scalar for Extended {
    // the library's own exp/ln stop near 1e-12 relative accuracy
    fn exp_p(self) -> Self {
        extended_exp(self)
    }

    fn ln_p(self) -> Self {
        extended_ln(self)
    }

    // twofloat's own quotient is only good to about 1e-16
    fn div_p(self, rhs: Self) -> Self {
        extended_div(self, rhs)
    }

    const PRECISION: Precision = Precision::Big;

    fn unit_roundoff() -> f64 {
        // 2^-104
        4.930380657631324e-32
    }

    fn from_rational(r: &BigRational) -> Self {
        let hi = rational_to_f64(r);
        if !hi.is_finite() {
            return Extended::from(hi);
        }
        let rest = r - BigRational::from_float(hi).expect("finite");
        let lo = rational_to_f64(&rest);
        Extended::new_add(hi, lo)
    }

    fn lit(x: f64) -> Self {
        Extended::from(x)
    }

    fn as_f64(self) -> f64 {
        self.hi() + self.lo()
    }

    fn to_round_trip_string(self) -> String {
        if !(self.hi().is_finite() && self.lo().is_finite()) {
            return format!("{:?}", self.hi());
        }
        let exact = BigRational::from_float(self.hi()).expect("finite")
            + BigRational::from_float(self.lo()).expect("finite");
        format_scientific(&exact, 34)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Error from [`parse_exact`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed exact number `{0}`")]
pub struct ParseExactError(pub String);

/// Parses `"p/q"`, `"-12.5"`, or `"4.9e-2"` into an exact rational.
pub fn parse_exact(text: &str) -> Result<BigRational, ParseExactError> {
    let err = || ParseExactError(text.to_string());
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_exact(num)?;
        let d = parse_exact(den)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().map_err(|_| err())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Formats an exact rational with `digits` significant decimal digits in
/// scientific notation (round half away from zero).
pub fn format_scientific(value: &BigRational, digits: usize) -> String {
    if value.is_zero() {
        return "0.0".to_string();
    }
    let negative = value.is_negative();
    let mag = value.abs();
    let ten = BigRational::from_integer(BigInt::from(10));

    // Estimate the decimal exponent from f64, then correct.
    let approx = mag.to_f64().filter(|x| x.is_finite() && *x > 0.0);
    let mut exp10 = approx.map(|x| x.log10().floor() as i32).unwrap_or(0);
    let pow10 = |e: i32| -> BigRational {
        if e >= 0 {
            num_traits::pow(ten.clone(), e as usize)
        } else {
            BigRational::one() / num_traits::pow(ten.clone(), (-e) as usize)
        }
    };
    while mag >= pow10(exp10 + 1) {
        exp10 += 1;
    }
    while mag < pow10(exp10) {
        exp10 -= 1;
    }
    let scaled = &mag * pow10(digits as i32 - 1 - exp10);
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mut int = (scaled + half).floor().to_integer();
    if int.to_string().len() > digits {
        int /= BigInt::from(10);
        exp10 += 1;
    }
    let text = int.to_string();
    let (lead, rest) = text.split_at(1);
    let rest = rest.trim_end_matches('0');
    let rest = if rest.is_empty() { "0" } else { rest };
    format!("{}{lead}.{rest}e{exp10}", if negative { "-" } else { "" })
}

#[cfg(feature = "extended")]
const LN2_HI: f64 = std::f64::consts::LN_2;
#[cfg(feature = "extended")]
const LN2_LO: f64 = 2.3190468138462996e-17;

#[cfg(feature = "extended")]
fn extended_exp(x: Extended) -> Extended {
    if x.is_nan() {
        return x;
    }
    if x.hi() > 709.0 {
        return Extended::from(f64::INFINITY);
    }
    if x.hi() < -745.0 {
        return Extended::from(0.0);
    }
    let ln2 = Extended::new_add(LN2_HI, LN2_LO);
    let k = (x.hi() / LN2_HI).round();
    // |r| <= ln2/2, scaled down by 2^8; work with e^r - 1 so the repeated
    // squaring does not amplify the rounding error of the series
    let r = (x - ln2 * k) / 256.0;
    let mut term = r;
    let mut em1 = r;
    for n in 2..=12 {
        term = term * r / (n as f64);
        em1 += term;
    }
    for _ in 0..8 {
        em1 = em1 * (em1 + 2.0);
    }
    let sum = em1 + 1.0;
    let (mut scale, mut k) = (sum, k as i32);
    // apply 2^k in pieces that stay representable
    while k > 0 {
        let step = k.min(1000);
        scale *= 2f64.powi(step);
        k -= step;
    }
    while k < 0 {
        let step = (-k).min(1000);
        scale *= 2f64.powi(-step);
        k += step;
    }
    scale
}

/// Long division: three f64 quotient digits, each correcting the remainder
/// left by the previous ones.
#[cfg(feature = "extended")]
fn extended_div(x: Extended, y: Extended) -> Extended {
    let q1 = x.hi() / y.hi();
    if !q1.is_finite() || q1 == 0.0 {
        return Extended::from(q1);
    }
    let r = x - y * q1;
    let q2 = r.hi() / y.hi();
    let r = r - y * q2;
    let q3 = r.hi() / y.hi();
    Extended::new_add(q1, q2) + q3
}

#[cfg(feature = "extended")]
fn extended_ln(x: Extended) -> Extended {
    if !(x.hi() > 0.0) || !x.is_finite() {
        return Extended::from(x.hi().ln());
    }
    // Newton on exp(y) = x from the f64 estimate
    let mut y = Extended::from(x.hi().ln());
    for _ in 0..2 {
        y = y + x * extended_exp(-y) - 1.0;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(
            parse_exact("3/40").unwrap(),
            BigRational::new(3.into(), 40.into())
        );
        assert_eq!(
            parse_exact("-0.161").unwrap(),
            BigRational::new((-161).into(), 1000.into())
        );
        assert_eq!(
            parse_exact("4.9e-2").unwrap(),
            BigRational::new(49.into(), 1000.into())
        );
        assert_eq!(parse_exact("12").unwrap(), BigRational::from_integer(12.into()));
        assert!(parse_exact("1/0").is_err());
        assert!(parse_exact("abc").is_err());
        assert!(parse_exact(".").is_err());
    }

    #[test]
    fn scientific_formatting() {
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(format_scientific(&third, 5), "3.3333e-1");
        let v = parse_exact("-9.99996").unwrap();
        assert_eq!(format_scientific(&v, 5), "-1.0e1");
        assert_eq!(format_scientific(&BigRational::zero(), 5), "0.0");
    }

    #[test]
    fn f64_rational_conversion_is_exact_for_dyadics() {
        assert_eq!(f64::from_rational(&parse_exact("1/4").unwrap()), 0.25);
        assert_eq!(f32::from_rational(&parse_exact("-3/8").unwrap()), -0.375);
    }

    #[test]
    fn precision_tags_round_trip() {
        for p in Precision::ALL {
            assert_eq!(p.tag().parse::<Precision>().unwrap(), p);
        }
        assert!("f16".parse::<Precision>().is_err());
    }

    #[cfg(feature = "extended")]
    #[test]
    fn extended_carries_more_digits_than_f64() {
        let third = Extended::from_rational(&parse_exact("1/3").unwrap());
        let residual = third * Extended::lit(3.0) - Extended::lit(1.0);
        assert!(residual.abs().as_f64() < 1e-30);
        let text = third.to_round_trip_string();
        assert!(text.starts_with("3.33333333333333333333333333333"), "{text}");
        let back = Extended::from_rational(&parse_exact(&text).unwrap());
        assert_eq!(back, third);
    }

    #[cfg(feature = "extended")]
    #[test]
    fn extended_division_is_double_double() {
        let third = parse_exact("1/3").unwrap();
        let q = Extended::lit(1.0).div_p(Extended::lit(3.0));
        assert!((q - Extended::from_rational(&third)).abs().as_f64() < 1e-32);
        let x = Extended::new_add(3.0, 1e-17);
        let y = Extended::new_add(7.0, 3e-18);
        let q = x.div_p(y);
        assert!((q * y - x).abs().as_f64() < 1e-31);
        assert!(Extended::lit(1.0).div_p(Extended::lit(0.0)).is_infinite());
        assert_eq!(Extended::lit(0.0).div_p(Extended::lit(5.0)).as_f64(), 0.0);
    }

    #[cfg(feature = "extended")]
    #[test]
    fn extended_exp_matches_reference() {
        // e^-1 to 40 digits
        let reference = parse_exact("0.3678794411714423215955237701614608674458").unwrap();
        let value = Extended::lit(-1.0).exp_p();
        let diff = Extended::from_rational(&reference) - value;
        assert!(diff.abs().as_f64() < 1e-31, "{diff:?}");
    }

    #[cfg(feature = "extended")]
    #[test]
    fn extended_log_inverts_exp() {
        // ln 2 to 40 digits
        let ln2 = parse_exact("0.6931471805599453094172321214581765680755").unwrap();
        let value = Extended::lit(2.0).ln_p();
        assert!((Extended::from_rational(&ln2) - value).abs().as_f64() < 1e-31);
        for x in [-30.0, -3.5, 0.25, 7.0, 40.0] {
            let v = Extended::lit(x);
            let back = v.exp_p().ln_p();
            assert!(
                (back - v).abs().as_f64() < 1e-30 * x.abs().max(1.0),
                "{x}: {back:?}"
            );
        }
        assert_eq!(Extended::lit(800.0).exp_p().hi(), f64::INFINITY);
        assert_eq!(Extended::lit(-800.0).exp_p().hi(), 0.0);
    }

    #[test]
    fn plain_floats_use_native_exp() {
        assert_eq!(1.5f64.exp_p(), 1.5f64.exp());
        assert_eq!(2.0f32.ln_p(), 2.0f32.ln());
    }
}
