//! Extended-precision helpers for alternating series whose terms dwarf their sum.
//!
//! Only what the closed forms need: basic arithmetic, `exp`/`ln`, `E₁`, and
//! upper incomplete gamma tables at integer shapes.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};

const RM: RoundingMode = RoundingMode::ToEven;

const EULER_GAMMA: &str = "0.57721566490153286060651209008240243104215933593992359880576723488486772677766467093694706329174674951463144724980708248096050401448654283622417399764492353625350033374293733773767394279259525824709491600873520394816567085323315177661152862119950150798479374508570574002992135478614669402960432542151905877553526733139925401296742051375413954911168510280798423487758720503843109399736137255306088933126760017247953783675927135157722610273492913940798430103417771778088154957066107501016191663340152278935867965497252036212879226555953669628176388";

/// Working precision plus a reusable constants cache.
pub struct Hp {
    prec: usize,
    cc: Consts,
}

impl Hp {
    pub fn new(bits: usize) -> Self {
        Self {
            prec: bits.max(64),
            cc: Consts::new().expect("astro-float constants cache"),
        }
    }

    pub fn bits(&self) -> usize {
        self.prec
    }

    /// Exact conversion (every f64 is representable).
    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.prec)
    }

    pub fn int(&self, n: i64) -> BigFloat {
        BigFloat::from_i64(n, self.prec)
    }

    pub fn zero(&self) -> BigFloat {
        self.int(0)
    }

    pub fn one(&self) -> BigFloat {
        self.int(1)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.prec, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.prec, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.prec, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.prec, RM)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.prec, RM, &mut self.cc)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.prec, RM, &mut self.cc)
    }

    fn euler_gamma(&mut self) -> BigFloat {
        BigFloat::parse(EULER_GAMMA, Radix::Dec, self.prec, RM, &mut self.cc)
    }

    /// `E₁(x)` by its convergent power series, with guard bits for the
    /// internal cancellation (terms peak near `eˣ`).
    pub fn e1(&mut self, x: f64) -> BigFloat {
        assert!(x > 0.0 && x.is_finite());
        let guard = (x * std::f64::consts::LOG2_E).ceil() as usize + 16;
        let outer = self.prec;
        self.prec = outer + guard;
        let xb = self.num(x);
        let mut pow_over_fact = self.one();
        let mut sum = self.zero();
        let stop = self.prec as i32 + 8;
        for k in 1..100_000i64 {
            pow_over_fact = self.div(&self.mul(&pow_over_fact, &xb), &self.int(k));
            let t = self.div(&pow_over_fact, &self.int(k));
            sum = if k % 2 == 1 {
                self.add(&sum, &t)
            } else {
                self.sub(&sum, &t)
            };
            if k as f64 > x && !t.is_zero() && !sum.is_zero() {
                let (et, es) = (t.exponent().unwrap_or(0), sum.exponent().unwrap_or(0));
                if es - et > stop {
                    break;
                }
            }
        }
        let g = self.euler_gamma();
        let lnx = self.ln(&xb);
        let res = self.sub(&self.sub(&sum, &g), &lnx);
        self.prec = outer;
        res.add(&self.zero(), outer, RM)
    }

    /// `Γ(s, x)` for every integer `s` in `lo..=hi`, anchored at `Γ(0, x) = E₁(x)`.
    pub fn upper_gamma_table(&mut self, x: f64, lo: i64, hi: i64) -> Vec<BigFloat> {
        assert!(lo <= hi);
        let xb = self.num(x);
        let ex = self.exp(&xb.neg());
        let g0 = self.e1(x);
        let width = (hi - lo + 1) as usize;
        let mut out = vec![self.zero(); width];
        let idx = |s: i64| (s - lo) as usize;
        if (lo..=hi).contains(&0) {
            out[idx(0)] = g0.clone();
        }
        // upward: Γ(s+1) = sΓ(s) + xˢe⁻ˣ
        let (mut g, mut xs) = (g0.clone(), self.one());
        for s in 0..hi {
            let next = self.add(&self.mul(&self.int(s), &g), &self.mul(&xs, &ex));
            g = next;
            xs = self.mul(&xs, &xb);
            if s + 1 >= lo {
                out[idx(s + 1)] = g.clone();
            }
        }
        // downward: Γ(s) = (Γ(s+1) - xˢe⁻ˣ) / s
        let (mut g, mut xs) = (g0, self.one());
        let mut s = 0;
        while s > lo {
            s -= 1;
            xs = self.div(&xs, &xb);
            g = self.div(&self.sub(&g, &self.mul(&xs, &ex)), &self.int(s));
            if s <= hi {
                out[idx(s)] = g.clone();
            }
        }
        out
    }
}

/// Nearest `f64` for normal results (only the top mantissa word is used).
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let Some(&top) = words.last() else {
        return 0.0;
    };
    if top == 0 {
        return 0.0;
    }
    // value = 0.top… × 2^e
    let word_bits = (std::mem::size_of_val(&top) * 8) as i32;
    let mag = ldexp(top as f64, e - word_bits);
    match sign {
        Sign::Neg => -mag,
        Sign::Pos => mag,
    }
}

fn ldexp(m: f64, e: i32) -> f64 {
    // split to keep each factor representable
    let mut v = m;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e)
}

/// `log₂ |x|`, or `-inf` for zero.
pub fn log2_abs(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    match x.exponent() {
        Some(e) => {
            let mant = to_f64(x).abs();
            if mant.is_finite() && mant > 0.0 {
                mant.log2()
            } else {
                e as f64
            }
        }
        None => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roundtrip_f64() {
        let hp = Hp::new(200);
        for x in [1.0, -0.3, 1e-300, 7.5e250, std::f64::consts::PI, -2.0f64.powi(-1000)] {
            assert_eq!(to_f64(&hp.num(x)), x);
        }
        assert_eq!(to_f64(&hp.zero()), 0.0);
    }

    #[test]
    fn e1_reference_values() {
        let mut hp = Hp::new(128);
        assert_relative_eq!(to_f64(&hp.e1(1.0)), 0.219_383_934_395_520_3, max_relative = 1e-15);
        assert_relative_eq!(to_f64(&hp.e1(30.0)), 3.002_432_775_731_5e-15, max_relative = 1e-12);
    }

    #[test]
    fn table_matches_closed_forms() {
        let mut hp = Hp::new(192);
        let x: f64 = 0.7;
        let t = hp.upper_gamma_table(x, -3, 3);
        // Γ(1,x) = e^-x, Γ(2,x) = (1+x)e^-x, Γ(3,x) = (2+2x+x²)e^-x
        let e = (-x).exp();
        assert_relative_eq!(to_f64(&t[4]), e, max_relative = 1e-15);
        assert_relative_eq!(to_f64(&t[5]), (1.0 + x) * e, max_relative = 1e-15);
        assert_relative_eq!(to_f64(&t[6]), (2.0 + 2.0 * x + x * x) * e, max_relative = 1e-15);
        // Γ(-1,x) = e^-x/x - E1(x)
        let e1 = to_f64(&hp.e1(x));
        assert_relative_eq!(to_f64(&t[2]), e / x - e1, max_relative = 1e-14);
        // cross-check the negative shapes against the f64 implementation
        for (i, s) in (-3..=3).enumerate() {
            let want = crate::specfun::upper_inc_gamma(s as f64, x).unwrap();
            assert_relative_eq!(to_f64(&t[i]), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn table_without_zero_in_range() {
        let mut hp = Hp::new(128);
        let t = hp.upper_gamma_table(2.5, -8, -5);
        for (i, s) in (-8..=-5).enumerate() {
            let want = crate::specfun::upper_inc_gamma(s as f64, 2.5).unwrap();
            assert_relative_eq!(to_f64(&t[i]), want, max_relative = 1e-12);
        }
    }
}
