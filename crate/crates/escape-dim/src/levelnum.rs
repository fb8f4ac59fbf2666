//! Extended reals in level-index form.
//!
//! A [`LevelReal`] stores `sign · exp^level(m)` where `exp^0(m) = m`. Level 0
//! holds ordinary binary64 magnitudes below [`T`]; every exponentiation past
//! `T` moves one level up, so towers such as `e^{n a_n^d}` stay finite.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Normalization threshold: level-0 mantissas lie in `[0, T)`.
pub const T: f64 = 1e15;
/// Log-gap beyond which the smaller addend is absorbed.
pub const ABSORB: f64 = 40.0;
/// Highest representable level.
pub const MAX_LEVEL: u8 = 8;
/// Relative accuracy a resolved quotient must carry.
pub const RATIO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevelError {
    #[error("logarithm of a nonpositive value ({0})")]
    Domain(String),
    #[error("level cap {MAX_LEVEL} exceeded")]
    LevelCap,
    #[error("non-finite binary64 input")]
    NonFinite,
    #[error("malformed level-index literal `{0}`")]
    Parse(String),
}

/// Smallest binary64 `m` with `exp(m) >= T`; the level-1 mantissa floor.
pub fn level_floor() -> f64 {
    static FLOOR: OnceLock<f64> = OnceLock::new();
    *FLOOR.get_or_init(|| {
        let mut m = T.ln();
        while m.exp() < T {
            m = m.next_up();
        }
        while m.next_down().exp() >= T {
            m = m.next_down();
        }
        m
    })
}

fn ulp(x: f64) -> f64 {
    let a = x.abs();
    a.next_up() - a
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelReal {
    sign: i8,
    level: u8,
    m: f64,
}

/// Result of an addition that may have cancelled beyond the working precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sum {
    pub value: LevelReal,
    /// Set when the operands agree to the resolution of their mantissas and
    /// the difference carries no information.
    pub indistinguishable: bool,
}

/// Quotient of two level reals reduced to binary64.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    Value(f64),
    /// Quotient exceeds the binary64 range.
    Overflow,
    /// Operands too deep for the quotient to be resolved to [`RATIO_TOL`].
    Unresolved,
}

impl Ratio {
    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl LevelReal {
    pub const ZERO: LevelReal = LevelReal { sign: 0, level: 0, m: 0.0 };
    pub const ONE: LevelReal = LevelReal { sign: 1, level: 0, m: 1.0 };

    fn canon(sign: i8, level: i32, m: f64) -> Result<Self, LevelError> {
        if !m.is_finite() {
            return Err(LevelError::NonFinite);
        }
        if sign == 0 || (m == 0.0 && level == 0) {
            return Ok(Self::ZERO);
        }
        let floor = level_floor();
        let (mut level, mut m) = (level, m);
        loop {
            if m >= T {
                m = m.ln();
                level += 1;
            } else if level >= 1 && m < floor {
                m = m.exp();
                level -= 1;
            } else {
                break;
            }
            if level > MAX_LEVEL as i32 + 1 {
                return Err(LevelError::LevelCap);
            }
        }
        if level > MAX_LEVEL as i32 {
            return Err(LevelError::LevelCap);
        }
        if m == 0.0 && level == 0 {
            return Ok(Self::ZERO);
        }
        Ok(LevelReal { sign, level: level as u8, m })
    }

    pub fn from_f64(x: f64) -> Result<Self, LevelError> {
        if !x.is_finite() {
            return Err(LevelError::NonFinite);
        }
        let sign = if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        };
        Self::canon(sign, 0, x.abs())
    }

    /// `sign · exp^level(m)` for an arbitrary nonnegative mantissa, normalized.
    pub fn tower(sign: i8, level: u8, m: f64) -> Result<Self, LevelError> {
        if m < 0.0 {
            return Err(LevelError::Domain(format!("mantissa {m}")));
        }
        if level > MAX_LEVEL {
            return Err(LevelError::LevelCap);
        }
        Self::canon(sign.signum(), level as i32, m)
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn mantissa(&self) -> f64 {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    pub fn neg(self) -> Self {
        LevelReal { sign: -self.sign, ..self }
    }

    fn with_sign(self, sign: i8) -> Self {
        if self.is_zero() {
            self
        } else {
            LevelReal { sign, ..self }
        }
    }

    pub fn abs(self) -> Self {
        LevelReal { sign: self.sign.abs(), ..self }
    }

    /// Binary64 value; infinite once the magnitude passes `f64::MAX`.
    pub fn to_f64(&self) -> f64 {
        let mag = match self.level {
            0 => self.m,
            1 => self.m.exp(),
            _ => f64::INFINITY,
        };
        self.sign as f64 * mag
    }

    pub fn ln(self) -> Result<Self, LevelError> {
        if self.sign <= 0 {
            return Err(LevelError::Domain(self.to_string()));
        }
        if self.level == 0 {
            let l = self.m.ln();
            let sign = if l < 0.0 { -1 } else { 1 };
            Self::canon(sign, 0, l.abs())
        } else {
            Ok(LevelReal { sign: 1, level: self.level - 1, m: self.m })
        }
    }

    /// Values below `-T` underflow to zero.
    pub fn exp(self) -> Result<Self, LevelError> {
        match self.sign {
            0 => Ok(Self::ONE),
            1 => Self::canon(1, self.level as i32 + 1, self.m),
            _ if self.level == 0 => Self::from_f64((-self.m).exp()),
            _ => Ok(Self::ZERO),
        }
    }

    fn cmp_mag(&self, other: &Self) -> Ordering {
        self.level
            .cmp(&other.level)
            .then(self.m.partial_cmp(&other.m).unwrap_or(Ordering::Equal))
    }

    /// Resolution of the stored magnitude, as an absolute binary64 error.
    fn resolution(&self) -> f64 {
        match self.level {
            0 => ulp(self.m),
            1 => self.m.exp() * ulp(self.m),
            _ => f64::INFINITY,
        }
    }

    pub fn add_flagged(self, other: Self) -> Result<Sum, LevelError> {
        let exact = |value| Sum { value, indistinguishable: false };
        if other.is_zero() {
            return Ok(exact(self));
        }
        if self.is_zero() {
            return Ok(exact(other));
        }
        if self.level == 0 && other.level == 0 {
            let s = self.sign as f64 * self.m + other.sign as f64 * other.m;
            return Ok(exact(Self::from_f64(s)?));
        }
        let (big, small) = if self.cmp_mag(&other) == Ordering::Less {
            (other, self)
        } else {
            (self, other)
        };
        let opposite = big.sign != small.sign;
        if opposite && big.cmp_mag(&small) == Ordering::Equal {
            return Ok(Sum { value: Self::ZERO, indistinguishable: true });
        }
        let lb = big.abs().ln()?;
        let ls = small.abs().ln()?;
        let gap = lb.add_flagged(ls.neg())?;
        if !gap.indistinguishable && gap.value > Self::from_f64(ABSORB)? {
            return Ok(exact(big));
        }
        let g = gap.value.to_f64().max(0.0);
        let r = if !opposite {
            let g = if gap.indistinguishable { 0.0 } else { g };
            lb.add(Self::from_f64((-g).exp().ln_1p())?)?
        } else {
            if gap.indistinguishable || g <= 64.0 * lb.resolution() {
                return Ok(Sum { value: Self::ZERO, indistinguishable: true });
            }
            lb.add(Self::from_f64((-(-g).exp_m1()).ln())?)?
        };
        Ok(exact(r.exp()?.with_sign(big.sign)))
    }

    /// Sum with the cancellation flag dropped (flagged results read as zero).
    pub fn add(self, other: Self) -> Result<Self, LevelError> {
        Ok(self.add_flagged(other)?.value)
    }

    pub fn sub(self, other: Self) -> Result<Self, LevelError> {
        self.add(other.neg())
    }

    pub fn sub_flagged(self, other: Self) -> Result<Sum, LevelError> {
        self.add_flagged(other.neg())
    }

    pub fn mul(self, other: Self) -> Result<Self, LevelError> {
        let sign = self.sign * other.sign;
        if sign == 0 {
            return Ok(Self::ZERO);
        }
        if self.level == 0 && other.level == 0 {
            let p = self.m * other.m;
            if p.is_finite() && p >= f64::MIN_POSITIVE {
                return Self::canon(sign, 0, p);
            }
        }
        let l = self.abs().ln()?.add(other.abs().ln()?)?;
        Ok(l.exp()?.with_sign(sign))
    }

    pub fn div(self, other: Self) -> Result<Self, LevelError> {
        if other.is_zero() {
            return Err(LevelError::Domain("division by zero".into()));
        }
        let sign = self.sign * other.sign;
        if sign == 0 {
            return Ok(Self::ZERO);
        }
        if self.level == 0 && other.level == 0 {
            let p = self.m / other.m;
            if p.is_finite() && p >= f64::MIN_POSITIVE {
                return Self::canon(sign, 0, p);
            }
        }
        let l = self.abs().ln()?.sub(other.abs().ln()?)?;
        Ok(l.exp()?.with_sign(sign))
    }

    pub fn scale(self, p: f64) -> Result<Self, LevelError> {
        self.mul(Self::from_f64(p)?)
    }

    /// `x^p` for `x > 0`.
    pub fn powf(self, p: f64) -> Result<Self, LevelError> {
        if p == 0.0 {
            return Ok(Self::ONE);
        }
        self.ln()?.scale(p)?.exp()
    }

    /// `self / other` as binary64.
    pub fn ratio(self, other: Self) -> Ratio {
        if other.is_zero() {
            return Ratio::Overflow;
        }
        if self.is_zero() {
            return Ratio::Value(0.0);
        }
        let (x, y) = (self.to_f64(), other.to_f64());
        if x.is_finite() && y.is_finite() {
            let r = x / y;
            return if r.is_finite() { Ratio::Value(r) } else { Ratio::Overflow };
        }
        let sign = (self.sign * other.sign) as f64;
        let (Ok(lx), Ok(ly)) = (self.abs().ln(), other.abs().ln()) else {
            return Ratio::Unresolved;
        };
        let Ok(gap) = lx.sub_flagged(ly) else {
            return Ratio::Unresolved;
        };
        if gap.indistinguishable {
            return Ratio::Unresolved;
        }
        let g = gap.value.to_f64();
        if g > 709.0 {
            return Ratio::Overflow;
        }
        let err = 4.0 * (lx.resolution() + ly.resolution());
        if !(err <= RATIO_TOL) {
            return Ratio::Unresolved;
        }
        Ratio::Value(sign * g.exp())
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Textual form `±L<level>:<hex mantissa>`.
    pub fn to_literal(&self) -> String {
        let s = if self.sign < 0 { '-' } else { '+' };
        format!("{s}L{}:{}", self.level, hex_f64(self.m))
    }
}

/// Binary64 as a C99 hexadecimal literal (nonnegative inputs).
fn hex_f64(x: f64) -> String {
    if x == 0.0 {
        return "0x0p+0".into();
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (lead, e) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let digits = format!("{frac:013x}");
    let digits = digits.trim_end_matches('0');
    let sign = if e < 0 { '-' } else { '+' };
    if digits.is_empty() {
        format!("0x{lead}p{sign}{}", e.abs())
    } else {
        format!("0x{lead}.{digits}p{sign}{}", e.abs())
    }
}

impl Eq for LevelReal {}

impl Ord for LevelReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.cmp_mag(other),
                _ => other.cmp_mag(self),
            },
            o => o,
        }
    }
}

impl PartialOrd for LevelReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LevelReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign < 0 { "-" } else { "" };
        match self.level {
            0 => write!(f, "{s}{}", self.m),
            l => write!(f, "{s}exp^{l}({})", self.m),
        }
    }
}

impl FromStr for LevelReal {
    type Err = LevelError;

    /// Accepts `±L<l>:<hex>`, `exp^<l>(<m>)` and plain decimals.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LevelError::Parse(s.to_string());
        let t = s.trim();
        let (sign, body) = match t.as_bytes().first() {
            Some(b'+') => (1i8, &t[1..]),
            Some(b'-') => (-1i8, &t[1..]),
            _ => (1i8, t),
        };
        if let Some(rest) = body.strip_prefix('L') {
            let (lvl, hex) = rest.split_once(':').ok_or_else(bad)?;
            let level: u8 = lvl.parse().map_err(|_| bad())?;
            let m = hexf_parse::parse_hexf64(hex, false).map_err(|_| bad())?;
            if m == 0.0 && level == 0 {
                return Ok(Self::ZERO);
            }
            return Self::tower(sign, level, m);
        }
        if let Some(rest) = body.strip_prefix("exp^") {
            let (lvl, m) = rest.split_once('(').ok_or_else(bad)?;
            let m = m.strip_suffix(')').ok_or_else(bad)?;
            let level: u8 = lvl.parse().map_err(|_| bad())?;
            let m: f64 = m.trim().parse().map_err(|_| bad())?;
            return Self::tower(sign, level, m);
        }
        let x: f64 = body.parse().map_err(|_| bad())?;
        Self::from_f64(sign as f64 * x)
    }
}

impl Serialize for LevelReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_literal())
    }
}

impl<'de> Deserialize<'de> for LevelReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Self::from_f64(x).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
