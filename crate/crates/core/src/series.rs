//! Truncated Laurent series in `t = p^{-s}` with cyclotomic coefficients,
//! and exact rational functions in `t` used for closed forms.
//!
//! A [`TruncatedSeries`] knows every coefficient for exponents up to its
//! truncation order; beyond that coefficients are unknown, not zero.
//! Arithmetic tracks truncation pessimistically, and equality is decided only
//! on the shared known range.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cyclotomic::Cyclotomic;
use crate::rational::pow_p;

/// Laurent series with exact coefficients, truncated at order `trunc`.
#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    p: u64,
    lead: i64,
    /// coefficients of `t^lead ..= t^trunc`; length `trunc - lead + 1` (or 0).
    coeffs: Vec<Cyclotomic>,
    trunc: i64,
}

impl TruncatedSeries {
    /// Series with no nonzero coefficient known up to `trunc`.
    pub fn zero(p: u64, trunc: i64) -> Self {
        TruncatedSeries { p, lead: trunc + 1, coeffs: Vec::new(), trunc }
    }

    /// `c * t^k`, known exactly up to `trunc`.
    pub fn monomial(p: u64, c: Cyclotomic, k: i64, trunc: i64) -> Self {
        let mut s = TruncatedSeries::zero(p, trunc);
        s.add_term(k, c);
        s
    }

    pub fn constant(p: u64, c: Cyclotomic, trunc: i64) -> Self {
        Self::monomial(p, c, 0, trunc)
    }

    pub fn one(p: u64, trunc: i64) -> Self {
        Self::constant(p, Cyclotomic::one(p), trunc)
    }

    pub fn from_coeffs(p: u64, lead: i64, coeffs: Vec<Cyclotomic>, trunc: i64) -> Self {
        assert_eq!(coeffs.len() as i64, trunc - lead + 1, "coefficient span mismatch");
        TruncatedSeries { p, lead, coeffs, trunc }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn trunc_order(&self) -> i64 {
        self.trunc
    }

    /// Lowest exponent with a (possibly zero) stored coefficient.
    pub fn lead(&self) -> i64 {
        self.lead
    }

    /// Lowest exponent with a nonzero coefficient, if any is known.
    pub fn order_of_vanishing(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|i| self.lead + i as i64)
    }

    /// Coefficient of `t^n`: `None` when `n` is beyond the truncation order.
    pub fn coeff(&self, n: i64) -> Option<Cyclotomic> {
        if n > self.trunc {
            return None;
        }
        if n < self.lead {
            return Some(Cyclotomic::zero(self.p));
        }
        Some(self.coeffs[(n - self.lead) as usize].clone())
    }

    /// Mutating accumulation of `c * t^k` (panics above the truncation order).
    pub fn add_term(&mut self, k: i64, c: Cyclotomic) {
        assert!(k <= self.trunc, "term beyond truncation order");
        if c.is_zero() {
            return;
        }
        if k < self.lead {
            let pad = (self.lead - k) as usize;
            let mut new = vec![Cyclotomic::zero(self.p); pad];
            new.extend(self.coeffs.drain(..));
            self.coeffs = new;
            self.lead = k;
        }
        let idx = (k - self.lead) as usize;
        self.coeffs[idx] = self.coeffs[idx].add(&c);
    }

    /// Forget everything above `new_trunc` (or record a lower confidence).
    pub fn truncate_to(&self, new_trunc: i64) -> Self {
        if new_trunc >= self.trunc {
            let mut s = self.clone();
            s.trunc = new_trunc.min(self.trunc);
            return s;
        }
        let keep = ((new_trunc - self.lead + 1).max(0)) as usize;
        TruncatedSeries {
            p: self.p,
            lead: if keep == 0 { new_trunc + 1 } else { self.lead },
            coeffs: self.coeffs[..keep].to_vec(),
            trunc: new_trunc,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p);
        let trunc = self.trunc.min(other.trunc);
        let mut out = TruncatedSeries::zero(self.p, trunc);
        for src in [self, other] {
            for (i, c) in src.coeffs.iter().enumerate() {
                let k = src.lead + i as i64;
                if k <= trunc && !c.is_zero() {
                    out.add_term(k, c.clone());
                }
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut s = self.clone();
        for c in s.coeffs.iter_mut() {
            *c = c.neg();
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Product; the result is known up to
    /// `min(trunc_a + lead_b, trunc_b + lead_a)`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p);
        let trunc = (self.trunc + other.lead).min(other.trunc + self.lead);
        let mut out = TruncatedSeries::zero(self.p, trunc);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ka = self.lead + i as i64;
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let k = ka + other.lead + j as i64;
                if k <= trunc {
                    out.add_term(k, a.mul(b));
                }
            }
        }
        out
    }

    /// Multiply by the monomial `c * t^k` (exact; shifts the truncation).
    pub fn mul_monomial(&self, c: &Cyclotomic, k: i64) -> Self {
        let mut s = TruncatedSeries {
            p: self.p,
            lead: self.lead + k,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
            trunc: self.trunc + k,
        };
        if c.is_zero() {
            s.coeffs.clear();
            s.lead = s.trunc + 1;
        }
        s
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        TruncatedSeries {
            p: self.p,
            lead: self.lead,
            coeffs: self.coeffs.iter().map(|x| x.scale(c)).collect(),
            trunc: self.trunc,
        }
    }

    /// True when every known coefficient vanishes.
    pub fn is_zero_known(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Exact equality decision up to the requested order.
    pub fn eq_up_to(&self, other: &Self, requested: i64) -> SeriesEq {
        assert_eq!(self.p, other.p);
        let shared = self.trunc.min(other.trunc);
        let upto = shared.min(requested);
        let lo = self.lead.min(other.lead);
        for n in lo..=upto {
            let a = self.coeff(n).expect("within truncation");
            let b = other.coeff(n).expect("within truncation");
            if !a.eq_elem(&b) {
                return SeriesEq::Unequal { exponent: n };
            }
        }
        if shared < requested {
            SeriesEq::Inconclusive { shared_order: shared, requested }
        } else {
            SeriesEq::Equal { order: upto }
        }
    }

    /// Approximate complex value at `t = t0` (reporting only).
    pub fn approx_at(&self, t0: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (cr, ci) = c.approx();
            let w = t0.powi((self.lead + i as i64) as i32);
            re += cr * w;
            im += ci * w;
        }
        (re, im)
    }

    /// Rows `(exponent, coefficient)` for display and CSV emission.
    pub fn rows(&self) -> Vec<(i64, Cyclotomic)> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (self.lead + i as i64, c.reduce_level()))
            .collect()
    }
}

impl std::fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (k, c) in self.rows() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match c.as_rational() {
                Some(r) => write!(f, "({})", r)?,
                None => write!(f, "[{}]", c.describe())?,
            }
            if k != 0 {
                write!(f, "*t^{}", k)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(t^{})", self.trunc + 1)
    }
}

/// Outcome of a truncation-aware equality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesEq {
    Equal { order: i64 },
    Inconclusive { shared_order: i64, requested: i64 },
    Unequal { exponent: i64 },
}

impl SeriesEq {
    pub fn is_equal(&self) -> bool {
        matches!(self, SeriesEq::Equal { .. })
    }
}

// ---------------------------------------------------------------------------
// Serialization: {p, lead, trunc_order, coeffs: [[level, [rational strings]]]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SeriesRecord {
    p: u64,
    lead: i64,
    trunc_order: i64,
    coeffs: Vec<(u32, Vec<String>)>,
}

impl Serialize for TruncatedSeries {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let r = c.reduce_level();
                (r.level(), r.coeffs().iter().map(|x| x.to_string()).collect())
            })
            .collect();
        SeriesRecord { p: self.p, lead: self.lead, trunc_order: self.trunc, coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = SeriesRecord::deserialize(d)?;
        let mut coeffs = Vec::with_capacity(rec.coeffs.len());
        for (level, strings) in rec.coeffs {
            let mut v = Vec::with_capacity(strings.len());
            for s in strings {
                v.push(s.parse::<BigRational>().map_err(|e| D::Error::custom(format!("{e}")))?);
            }
            if v.len() as u64 != crate::cyclotomic::phi_pk(rec.p, level) {
                return Err(D::Error::custom("coefficient vector has wrong length"));
            }
            coeffs.push(Cyclotomic::from_raw(rec.p, level, v));
        }
        if coeffs.len() as i64 != rec.trunc_order - rec.lead + 1 {
            return Err(D::Error::custom("coefficient span mismatch"));
        }
        Ok(TruncatedSeries::from_coeffs(rec.p, rec.lead, coeffs, rec.trunc_order))
    }
}

// ---------------------------------------------------------------------------
// Exact rational functions of t (oracles and geometric closures)
// ---------------------------------------------------------------------------

/// `t^lead * num(t) / den(t)` with rational coefficients and `den(0) != 0`.
#[derive(Debug, Clone)]
pub struct RatFunc {
    p: u64,
    lead: i64,
    num: Vec<BigRational>,
    den: Vec<BigRational>,
}

impl RatFunc {
    pub fn new(p: u64, lead: i64, num: Vec<BigRational>, den: Vec<BigRational>) -> Self {
        assert!(!den.is_empty() && !den[0].is_zero(), "denominator must be a series unit");
        RatFunc { p, lead, num, den }
    }

    pub fn zero(p: u64) -> Self {
        RatFunc::new(p, 0, vec![], vec![BigRational::one()])
    }

    pub fn constant(p: u64, c: BigRational) -> Self {
        RatFunc::new(p, 0, vec![c], vec![BigRational::one()])
    }

    pub fn monomial(p: u64, c: BigRational, k: i64) -> Self {
        RatFunc::new(p, k, vec![c], vec![BigRational::one()])
    }

    /// `1 / (1 - c t^k)` with `k > 0`.
    pub fn geometric(p: u64, c: BigRational, k: u32) -> Self {
        assert!(k > 0);
        let mut den = vec![BigRational::zero(); k as usize + 1];
        den[0] = BigRational::one();
        den[k as usize] = -c;
        RatFunc::new(p, 0, vec![BigRational::one()], den)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| c.is_zero())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p);
        RatFunc {
            p: self.p,
            lead: self.lead + other.lead,
            num: poly_mul(&self.num, &other.num),
            den: poly_mul(&self.den, &other.den),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p);
        let lead = self.lead.min(other.lead);
        let a = poly_shift(&poly_mul(&self.num, &other.den), (self.lead - lead) as usize);
        let b = poly_shift(&poly_mul(&other.num, &self.den), (other.lead - lead) as usize);
        RatFunc { p: self.p, lead, num: poly_add(&a, &b), den: poly_mul(&self.den, &other.den) }
    }

    pub fn neg(&self) -> Self {
        RatFunc {
            p: self.p,
            lead: self.lead,
            num: self.num.iter().map(|c| -c.clone()).collect(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Division; errors if `other` is identically zero.
    pub fn div(&self, other: &Self) -> Result<Self, DivisionError> {
        assert_eq!(self.p, other.p);
        let z = other.num.iter().position(|c| !c.is_zero()).ok_or(DivisionError::DivisionByZero)?;
        // other = t^{lead+z} * (num'/den) with num'[0] != 0; invert.
        let num_unit = other.num[z..].to_vec();
        Ok(RatFunc {
            p: self.p,
            lead: self.lead - other.lead - z as i64,
            num: poly_mul(&self.num, &other.den),
            den: poly_mul(&self.den, &num_unit),
        })
    }

    /// Exact evaluation at a rational point; errors on a denominator zero.
    pub fn eval(&self, t0: &BigRational) -> Result<BigRational, DivisionError> {
        let den = poly_eval(&self.den, t0);
        if den.is_zero() {
            return Err(DivisionError::PoleAt(t0.to_string()));
        }
        // fold leading zero coefficients of num into the monomial shift
        let z = self.num.iter().position(|c| !c.is_zero());
        let (lead, num_poly) = match z {
            None => return Ok(BigRational::zero()),
            Some(z) => (self.lead + z as i64, &self.num[z..]),
        };
        let num = poly_eval(num_poly, t0);
        if num.is_zero() {
            return Ok(BigRational::zero());
        }
        if lead < 0 && t0.is_zero() {
            return Err(DivisionError::PoleAt(t0.to_string()));
        }
        let shift = rational_pow(t0, lead);
        Ok(num / den * shift)
    }

    /// Substitute `t -> s / t` for a rational scale `s` (the reflection used
    /// by local functional equations), returning an exact rational function.
    pub fn substitute_scaled_reciprocal(&self, s: &BigRational) -> RatFunc {
        // t^lead num(t)/den(t) |-> s^lead t^{-lead} num(s/t)/den(s/t);
        // clearing t powers: num(s/t) = t^{-(dn-1)} rev_s(num),
        // den(s/t) = t^{-(dd-1)} rev_s(den) with rev_s(a)_k = a_{deg-k} s^{deg-k}.
        let rev = |poly: &[BigRational]| -> Vec<BigRational> {
            let deg = poly.len().saturating_sub(1);
            (0..=deg)
                .map(|k| {
                    let orig = deg - k;
                    &poly[orig] * rational_pow(s, orig as i64)
                })
                .collect()
        };
        let num = if self.num.is_empty() { vec![BigRational::zero()] } else { rev(&self.num) };
        let den = rev(&self.den);
        let dn = self.num.len().max(1) as i64 - 1;
        let dd = self.den.len() as i64 - 1;
        // strip leading zeros of the new denominator into the lead
        let z = den.iter().position(|c| !c.is_zero()).expect("nonzero denominator");
        let lead = -self.lead - dn + dd - z as i64;
        let scale = rational_pow(s, self.lead);
        let num = num.iter().map(|c| c * &scale).collect();
        RatFunc::new(self.p, lead, num, den[z..].to_vec())
    }

    /// Expand as a Laurent series, exact through `t^order`.
    pub fn expand(&self, order: i64) -> TruncatedSeries {
        let n_terms = (order - self.lead + 1).max(0) as usize;
        let mut out = TruncatedSeries::zero(self.p, order);
        if n_terms == 0 || self.is_zero() {
            return out;
        }
        // power series division num/den via the standard recurrence
        let mut c = vec![BigRational::zero(); n_terms];
        for i in 0..n_terms {
            let mut acc =
                if i < self.num.len() { self.num[i].clone() } else { BigRational::zero() };
            for j in 1..=i.min(self.den.len() - 1) {
                let term = &self.den[j] * &c[i - j];
                acc -= term;
            }
            c[i] = acc / &self.den[0];
        }
        for (i, v) in c.into_iter().enumerate() {
            if !v.is_zero() {
                out.add_term(self.lead + i as i64, Cyclotomic::from_rational(self.p, v));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DivisionError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("pole at t = {0}")]
    PoleAt(String),
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn poly_add(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_shift(a: &[BigRational], k: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + k];
    for (i, x) in a.iter().enumerate() {
        out[i + k] = x.clone();
    }
    out
}

fn poly_eval(a: &[BigRational], t0: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in a.iter().rev() {
        acc = acc * t0 + c;
    }
    acc
}

fn rational_pow(x: &BigRational, k: i64) -> BigRational {
    if k == 0 {
        return BigRational::one();
    }
    let mut acc = BigRational::one();
    let b = if k > 0 { x.clone() } else { x.recip() };
    for _ in 0..k.unsigned_abs() {
        acc *= &b;
    }
    acc
}

// ---------------------------------------------------------------------------
// Gamma factors
// ---------------------------------------------------------------------------

/// `gamma_p(s) = (1 - p^{-s})/(1 - p^{s-1})` as an exact rational function of
/// `t = p^{-s}`: `(1 - t)/(1 - t^{-1}/p) = (t - t^2)/(t - 1/p)`.
pub fn gamma_p(p: u64) -> RatFunc {
    let one = BigRational::one();
    // (1 - t) / (1 - t^{-1}/p): clear t^{-1} from the denominator.
    // = t(1 - t) / (t - 1/p) = -p t (1 - t) / (1 - p t)
    let minus_p = -BigRational::from_integer(p.into());
    let num = vec![minus_p.clone(), -minus_p.clone()];
    let den = vec![one, minus_p];
    RatFunc::new(p, 1, num, den)
}

/// `gamma_p(-s)` as a rational function of `t`: `(1 - t^{-1})/(1 - t/p)`.
pub fn gamma_p_neg(p: u64) -> RatFunc {
    let one = BigRational::one();
    let num = vec![-one.clone(), one.clone()];
    let den = vec![one, -pow_p(p, -1)];
    RatFunc::new(p, -1, num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn product_truncation_is_pessimistic() {
        // (1 + t)(1 - t) at order 5 -> 1 - t^2 known through t^5
        let p = 2;
        let mut a = TruncatedSeries::one(p, 5);
        a.add_term(1, Cyclotomic::one(p));
        let mut b = TruncatedSeries::one(p, 5);
        b.add_term(1, Cyclotomic::from_integer(p, -1));
        let prod = a.mul(&b);
        assert_eq!(prod.trunc_order(), 5);
        let mut expect = TruncatedSeries::one(p, 5);
        expect.add_term(2, Cyclotomic::from_integer(p, -1));
        assert!(prod.eq_up_to(&expect, 5).is_equal());
    }

    #[test]
    fn equality_is_order_aware() {
        let p = 2;
        let a = TruncatedSeries::one(p, 2); // 1 + O(t^3)
        let mut b = TruncatedSeries::one(p, 2);
        // pretend b = 1 + t^3 truncated at 2: the t^3 term is not storable
        // at order 2, so b == a conclusively at order 2 ...
        assert_eq!(a.eq_up_to(&b, 2), SeriesEq::Equal { order: 2 });
        // ... and only inconclusively at order 3.
        assert_eq!(
            a.eq_up_to(&b, 3),
            SeriesEq::Inconclusive { shared_order: 2, requested: 3 }
        );
        b.add_term(1, Cyclotomic::one(p));
        assert_eq!(a.eq_up_to(&b, 2), SeriesEq::Unequal { exponent: 1 });
    }

    #[test]
    fn geometric_closure_matches_explicit_summation() {
        // c/(1 - c' t^k) vs the explicit sum of c * c'^j t^{jk}
        let p = 3;
        let c = rat(5, 7);
        let cp = rat(1, 3);
        let k = 2u32;
        let closed = RatFunc::constant(p, c.clone()).mul(&RatFunc::geometric(p, cp.clone(), k));
        let series = closed.expand(11);
        let mut direct = TruncatedSeries::zero(p, 11);
        let mut w = c;
        let mut e = 0i64;
        while e <= 11 {
            direct.add_term(e, Cyclotomic::from_rational(p, w.clone()));
            w *= &cp;
            e += k as i64;
        }
        assert!(series.eq_up_to(&direct, 11).is_equal());
    }

    #[test]
    fn gamma_numeric_checks() {
        // gamma_2(2) = (1 - 1/4)/(1 - 2) = -3/4 at t = p^{-s} = 1/4
        let g = gamma_p(2);
        assert_eq!(g.eval(&rat(1, 4)).unwrap(), rat(-3, 4));
        // gamma_2(0) = 0 at t = 1
        assert_eq!(g.eval(&rat(1, 1)).unwrap(), rat(0, 1));
    }

    #[test]
    fn gamma_functional_identity() {
        // gamma_p(s) * gamma_p(1-s) = 1: substitute t -> p^{-1} t^{-1} for 1-s.
        // gamma_p(1-s) = (1 - p^{s-1})/(1 - p^{-s}) = (1 - t^{-1}/p)/(1 - t).
        for &p in &[2u64, 5] {
            let g = gamma_p(p);
            let num = vec![-pow_p(p, -1), BigRational::one()];
            let den = vec![BigRational::one(), -BigRational::one()];
            let g1ms = RatFunc::new(p, -1, num, den);
            let prod = g.mul(&g1ms);
            let one = RatFunc::constant(p, BigRational::one());
            let diff = prod.sub(&one);
            let s = diff.expand(10);
            assert!(s.is_zero_known(), "gamma_p(s) gamma_p(1-s) = 1 for p={}", p);
        }
    }

    #[test]
    fn gamma_neg_matches_substitution() {
        // gamma_p_neg expands like (1 - t^{-1})/(1 - t/p)
        let g = gamma_p_neg(2);
        let s = g.expand(3);
        assert!(s.coeff(-1).unwrap().eq_elem(&Cyclotomic::from_integer(2, -1)));
        assert!(s.coeff(0).unwrap().eq_elem(&Cyclotomic::from_rational(2, rat(1, 2))));
        assert!(s.coeff(1).unwrap().eq_elem(&Cyclotomic::from_rational(2, rat(1, 4))));
    }

    #[test]
    fn serialization_round_trip_is_exact() {
        let p = 2;
        let mut s = TruncatedSeries::zero(p, 4);
        s.add_term(-1, Cyclotomic::from_rational(p, rat(-7, 3)));
        s.add_term(2, Cyclotomic::root_of_unity(2, 2, 1));
        let json = serde_json::to_string(&s).unwrap();
        let back: TruncatedSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(back.lead(), s.lead());
        assert_eq!(back.trunc_order(), s.trunc_order());
        for n in -2..=4 {
            assert!(back.coeff(n).unwrap().eq_elem(&s.coeff(n).unwrap()));
        }
        let json2 = serde_json::to_string(&back).unwrap();
        assert_eq!(json, json2);
    }
}
