//! Tower-type bound evaluation with exact comparisons.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{config, domain, Result};

/// Values with at most this many decimal digits are kept exact.
pub const DIGIT_BUDGET: u64 = 10_000;

/// Largest bit length guaranteed to stay within [`DIGIT_BUDGET`] digits.
const BIT_BUDGET: u64 = 33_219;

/// Largest `r` accepted by the bound formulas.
pub const MAX_R: u32 = 16;

/// `t_height(top) + offset`, kept in canonical form: either `height == 0`,
/// or `height >= 1` and `2^top` exceeds the bit budget.
#[derive(Clone, Debug)]
pub struct TowerValue {
    height: u32,
    top: BigUint,
    offset: BigUint,
}

impl TowerValue {
    pub fn exact(v: BigUint) -> Self {
        TowerValue { height: 0, top: v, offset: BigUint::zero() }
    }

    fn canonical(mut height: u32, mut top: BigUint, offset: BigUint) -> Self {
        while height > 0 && top < BigUint::from(BIT_BUDGET) {
            let e = top.to_u64().expect("below budget");
            top = BigUint::one() << e;
            height -= 1;
        }
        if height == 0 {
            return TowerValue::exact(top + offset);
        }
        TowerValue { height, top, offset }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn top(&self) -> &BigUint {
        &self.top
    }

    pub fn offset(&self) -> &BigUint {
        &self.offset
    }

    /// The value itself, when it fits in the digit budget.
    pub fn as_exact(&self) -> Option<&BigUint> {
        (self.height == 0 && self.top.bits() <= BIT_BUDGET).then_some(&self.top)
    }

    pub fn is_exact(&self) -> bool {
        self.as_exact().is_some()
    }

    pub fn decimal_digits(&self) -> Option<usize> {
        self.as_exact().map(|v| v.to_str_radix(10).len())
    }

    pub fn plus(&self, k: u64) -> Self {
        Self::canonical(self.height, self.top.clone(), &self.offset + k)
    }

    fn lower(&self) -> TowerValue {
        // t_{h-1}(top); canonical again since top is large
        TowerValue { height: self.height - 1, top: self.top.clone(), offset: BigUint::zero() }
    }
}

/// `t_i(x)` with `t_0(x) = x` and `t_{i+1}(x) = 2^{t_i(x)}`.
pub fn tower(i: u32, x: &BigUint) -> TowerValue {
    TowerValue::canonical(i, x.clone(), BigUint::zero())
}

impl Ord for TowerValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.height, other.height) {
            (0, 0) => self.top.cmp(&other.top),
            (_, 0) => cmp_with_exact(self, &other.top),
            (0, _) => cmp_with_exact(other, &self.top).reverse(),
            _ => match self.lower().cmp(&other.lower()) {
                Ordering::Equal => self.offset.cmp(&other.offset),
                o => o,
            },
        }
    }
}

impl PartialEq for TowerValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for TowerValue {}

impl PartialOrd for TowerValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compares a tower of height at least one with an exact integer.
fn cmp_with_exact(t: &TowerValue, y: &BigUint) -> Ordering {
    if y.bits() <= BIT_BUDGET {
        return Ordering::Greater;
    }
    // 2^l <= y < 2^(l+1), and offsets stay far below 2^(l-1)
    let l = y.bits() - 1;
    match t.lower().cmp(&TowerValue::exact(BigUint::from(l))) {
        Ordering::Equal => {
            let rest = y - (BigUint::one() << l);
            t.offset.cmp(&rest)
        }
        o => o,
    }
}

impl fmt::Display for TowerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = self.as_exact() {
            return write!(f, "{v}");
        }
        let top = if self.top.bits() <= 64 { self.top.to_string() } else { format!("<{} bits>", self.top.bits()) };
        write!(f, "t_{}({top})", self.height)?;
        if !self.offset.is_zero() {
            write!(f, " + {}", self.offset)?;
        }
        Ok(())
    }
}

impl Serialize for TowerValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        match self.as_exact() {
            Some(v) => {
                m.serialize_entry("form", "exact")?;
                m.serialize_entry("value", &v.to_string())?;
                m.serialize_entry("decimal_digits", &self.decimal_digits())?;
            }
            None => {
                m.serialize_entry("form", "symbolic")?;
                m.serialize_entry("height", &self.height)?;
                m.serialize_entry("top", &self.top.to_string())?;
                m.serialize_entry("offset", &self.offset.to_string())?;
            }
        }
        m.end()
    }
}

/// Unquantified constants of the bounds; all default to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundParams {
    pub c_main: BigRational,
    pub c_simple: BigRational,
    pub c1: BigRational,
    pub c2: BigRational,
    pub c_prime: BigRational,
}

impl Default for BoundParams {
    fn default() -> Self {
        let one = BigRational::one();
        BoundParams { c_main: one.clone(), c_simple: one.clone(), c1: one.clone(), c2: one.clone(), c_prime: one }
    }
}

impl BoundParams {
    /// Sets one constant from `name=value`, with value an integer, `p/q` or a decimal.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let Some((name, value)) = assignment.split_once('=') else {
            return config(format!("expected name=value, got {assignment:?}"));
        };
        let v = parse_rational(value.trim())?;
        let slot = match name.trim() {
            "c" | "c_main" => &mut self.c_main,
            "c_simple" => &mut self.c_simple,
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "c'" | "c_prime" => &mut self.c_prime,
            other => return config(format!("unknown constant {other:?}")),
        };
        *slot = v;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in self.named() {
            if !c.is_positive() {
                return config(format!("constant {name} must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, &BigRational); 5] {
        [
            ("c", &self.c_main),
            ("c_simple", &self.c_simple),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("c_prime", &self.c_prime),
        ]
    }
}

impl Serialize for BoundParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(5))?;
        for (name, c) in self.named() {
            m.serialize_entry(name, &c.to_string())?;
        }
        m.end()
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || config::<BigRational>(format!("cannot parse {s:?} as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let (Ok(p), Ok(q)) = (p.trim().parse(), q.trim().parse::<num_bigint::BigInt>()) else {
            return bad();
        };
        if q.is_zero() {
            return bad();
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((a, b)) = s.split_once('.') {
        if b.is_empty() || !b.bytes().all(|c| c.is_ascii_digit()) {
            return bad();
        }
        let Ok(whole) = format!("{a}{b}").parse::<num_bigint::BigInt>() else {
            return bad();
        };
        let den = num_traits::pow(num_bigint::BigInt::from(10u32), b.len());
        return Ok(BigRational::new(whole, den));
    }
    match s.parse::<num_bigint::BigInt>() {
        Ok(v) => Ok(BigRational::from_integer(v)),
        Err(_) => bad(),
    }
}

fn rpow(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

/// `⌊q^{1/d}⌋` for a nonnegative rational `q`.
fn floor_root(q: &BigRational, d: u32) -> BigUint {
    let fl = q.floor().to_integer();
    let fl = fl.to_biguint().unwrap_or_default();
    // x^d <= q iff x^d <= ⌊q⌋ for integer x
    fl.nth_root(d)
}

/// Which formula a [`BoundReport`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Main,
    Simple,
    SimpleInduction,
}

impl Formula {
    pub fn describe(self) -> &'static str {
        match self {
            Formula::Main => "t_{r-2}(c k^-2 m^(2^(4-r)))",
            Formula::Simple => "t_{r-2}(c k^(2^(4-r)-2) m^(2^(4-r)))",
            Formula::SimpleInduction => "t_{r-2}(c' (5 sqrt k)^(2^(5-r)-4) m^(2^(4-r)))",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub formula: Formula,
    pub expression: &'static str,
    pub r: u32,
    pub m: u64,
    pub k: u64,
    /// floored inner argument
    pub inner_value: String,
    pub tower_height: u32,
    pub value: TowerValue,
}

fn check_rmk(r: u32, m: u64, k: u64) -> Result<()> {
    if !(3..=MAX_R).contains(&r) {
        return domain(format!("r must lie in 3..={MAX_R}, got {r}"));
    }
    if k == 0 || m == 0 {
        return domain("m and k must be positive");
    }
    Ok(())
}

/// Inner argument `⌊(c^D k^e m^2)^{1/D}⌋` with `D = 2^{r-3}`, which equals the
/// floor of the real expression with exponent `2^{4-r}` on `m`.
fn inner(r: u32, m: u64, k: u64, formula: Formula, p: &BoundParams) -> BigUint {
    let d = 1i64 << (r - 3);
    let m2 = BigRational::from_integer((m as u128 * m as u128).into());
    let kk = BigRational::from_integer(k.into());
    let q = match formula {
        Formula::Main => rpow(&p.c_main, d) * rpow(&kk, -(2 * d)) * m2,
        Formula::Simple => rpow(&p.c_simple, d) * rpow(&kk, 2 - 2 * d) * m2,
        Formula::SimpleInduction => {
            let b = BigRational::from_integer(25.into()) * kk;
            rpow(&p.c_prime, d) * rpow(&b, 2 - 2 * d) * m2
        }
    };
    floor_root(&q, d as u32)
}

fn evaluate(r: u32, m: u64, k: u64, formula: Formula, p: &BoundParams) -> Result<BoundReport> {
    check_rmk(r, m, k)?;
    p.validate()?;
    let x = inner(r, m, k, formula, p);
    Ok(BoundReport {
        formula,
        expression: formula.describe(),
        r,
        m,
        k,
        inner_value: x.to_string(),
        tower_height: r - 2,
        value: tower(r - 2, &x),
    })
}

pub fn main_lower_bound(r: u32, m: u64, k: u64, p: &BoundParams) -> Result<BoundReport> {
    evaluate(r, m, k, Formula::Main, p)
}

pub fn simple_lower_bound(r: u32, m: u64, k: u64, p: &BoundParams) -> Result<BoundReport> {
    evaluate(r, m, k, Formula::Simple, p)
}

pub fn simple_induction_bound(r: u32, m: u64, k: u64, p: &BoundParams) -> Result<BoundReport> {
    evaluate(r, m, k, Formula::SimpleInduction, p)
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LowerSide {
    Value { inner_value: String, tower_height: u32, value: TowerValue },
    Inapplicable { reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct Sandwich {
    pub r: u32,
    pub m: u64,
    pub k: u64,
    pub lower: LowerSide,
    pub upper_inner: String,
    pub upper: TowerValue,
}

/// `R_{r-k}(⌈m/(k+1)⌉ - k) <= D_r(m,k) <= R_r(m) + k` with the Ramsey bounds
/// `t_{r-2}(c₁m²) <= R_r(m) <= t_{r-1}(c₂m)` substituted.
pub fn sandwich(r: u32, m: u64, k: u64, p: &BoundParams) -> Result<Sandwich> {
    if !(2..=MAX_R).contains(&r) || m == 0 {
        return domain(format!("need 2 <= r <= {MAX_R} and m >= 1"));
    }
    p.validate()?;
    let lower = if (r as u64) < k + 2 {
        LowerSide::Inapplicable { reason: format!("r - k = {} is below 2", r as i64 - k as i64) }
    } else {
        let s = m.div_ceil(k + 1);
        if s <= k {
            LowerSide::Inapplicable { reason: format!("ceil(m/(k+1)) - k = {} is not positive", s as i64 - k as i64) }
        } else {
            let base = BigRational::from_integer(((s - k) as u128 * (s - k) as u128).into());
            let x = floor_root(&(&p.c1 * base), 1);
            let h = r - k as u32 - 2;
            LowerSide::Value { inner_value: x.to_string(), tower_height: h, value: tower(h, &x) }
        }
    };
    let y = floor_root(&(&p.c2 * BigRational::from_integer(m.into())), 1);
    Ok(Sandwich { r, m, k, lower, upper_inner: y.to_string(), upper: tower(r - 1, &y).plus(k) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn tower_examples() {
        assert_eq!(tower(0, &b(7)), TowerValue::exact(b(7)));
        assert_eq!(tower(1, &b(10)), TowerValue::exact(b(1024)));
        assert_eq!(tower(2, &b(4)), TowerValue::exact(b(65536)));
        let big = tower(2, &b(16));
        assert!(!big.is_exact());
        assert_eq!((big.height(), big.top()), (1, &b(65536)));
    }

    #[test]
    fn main_bound_examples() {
        let p = BoundParams::default();
        let r = main_lower_bound(3, 10, 1, &p).unwrap();
        assert_eq!(r.inner_value, "100");
        assert_eq!(r.value, TowerValue::exact(BigUint::one() << 100u32));
        let r = main_lower_bound(4, 16, 1, &p).unwrap();
        assert_eq!(r.value, tower(2, &b(16)));
        // k^-2: doubling k divides the inner argument by 4
        assert_eq!(main_lower_bound(3, 40, 1, &p).unwrap().inner_value, "1600");
        assert_eq!(main_lower_bound(3, 40, 2, &p).unwrap().inner_value, "400");
    }

    #[test]
    fn inner_floors_match_float_evaluation() {
        let p = BoundParams::default();
        for r in 3..=6u32 {
            for m in 1..60u64 {
                for k in 1..5u64 {
                    let e = 2f64.powi(4 - r as i32);
                    let main = (m as f64).powf(e) / (k * k) as f64;
                    let simple = (k as f64).powf(e - 2.0) * (m as f64).powf(e);
                    let ind = (5.0 * (k as f64).sqrt()).powf(2.0 * e - 4.0) * (m as f64).powf(e);
                    for (f, want) in [(Formula::Main, main), (Formula::Simple, simple), (Formula::SimpleInduction, ind)]
                    {
                        let got = inner(r, m, k, f, &p).to_f64().unwrap();
                        // float slack only matters right at integers
                        if (want - want.round()).abs() > 1e-9 {
                            assert_eq!(got, want.floor(), "{f:?} r={r} m={m} k={k}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn simple_bound_examples() {
        let p = BoundParams::default();
        // r = 4: t_2(c m / k)
        assert_eq!(simple_lower_bound(4, 12, 3, &p).unwrap().inner_value, "4");
        // r = 3: t_1(c m^2), no k dependence
        assert_eq!(simple_lower_bound(3, 5, 7, &p).unwrap().inner_value, "25");
        assert_eq!(simple_lower_bound(5, 1, 1, &p).unwrap().inner_value, "1");
    }

    #[test]
    fn sandwich_examples() {
        let p = BoundParams::default();
        let s = sandwich(5, 11, 1, &p).unwrap();
        match &s.lower {
            // R_4(5) >= t_2(25)
            LowerSide::Value { value, .. } => assert_eq!(value, &tower(1, &(BigUint::one() << 25u32))),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.upper, tower(4, &b(11)).plus(1));
        assert!(matches!(sandwich(3, 11, 2, &p).unwrap().lower, LowerSide::Inapplicable { .. }));
    }

    #[test]
    fn constants_parse() {
        let mut p = BoundParams::default();
        p.set("c=3/2").unwrap();
        p.set("c1=0.25").unwrap();
        assert_eq!(p.c_main, BigRational::new(3.into(), 2.into()));
        assert_eq!(p.c1, BigRational::new(1.into(), 4.into()));
        assert!(p.set("c9=1").is_err());
        p.set("c2=0").unwrap();
        assert!(p.validate().is_err());
        let r = main_lower_bound(
            3,
            10,
            1,
            &BoundParams { c_main: BigRational::new(1.into(), 2.into()), ..Default::default() },
        );
        assert_eq!(r.unwrap().inner_value, "50");
    }

    #[test]
    fn comparisons_across_forms() {
        let a = tower(3, &b(5));
        let c = tower(2, &b(1u64 << 20));
        assert_eq!(a.cmp(&c), Ordering::Less);
        assert_eq!((tower(3, &b(4)).height(), tower(3, &b(4)).top()), (1, &b(65536)));
        assert!(tower(3, &b(5)) > tower(2, &b(31)));
        assert_eq!(tower(2, &b(40_000)), tower(1, &(BigUint::one() << 40_000u32)));
        assert!(tower(3, &b(4)) < tower(3, &b(4)).plus(1));
        assert!(tower(3, &b(4)).plus(5) < tower(3, &b(5)));
        // exact values beyond the budget against towers
        let y = BigUint::one() << 70_000u32;
        assert_eq!(tower(1, &b(70_000)).cmp(&TowerValue::exact(y.clone())), Ordering::Equal);
        assert_eq!(tower(1, &b(70_000)).cmp(&TowerValue::exact(&y + 1u32)), Ordering::Less);
        assert_eq!(tower(1, &b(70_001)).cmp(&TowerValue::exact(y)), Ordering::Greater);
    }
}
