//! Double-double arithmetic, enough to reduce large phases modulo one turn.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_i128(n: i128) -> Self {
        let hi = n as f64;
        let lo = (n - hi as i128) as f64;
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        self.mul(Dd::new(b))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(self) -> f64 {
        let k = self.hi.floor();
        let r = self.sub(Dd::new(k));
        let k2 = r.hi.floor();
        let f = r.sub(Dd::new(k2)).to_f64();
        if f >= 1.0 {
            f - 1.0
        } else if f < 0.0 {
            f + 1.0
        } else {
            f
        }
    }
}

/// `2π` to double-double precision.
pub const TWO_PI: Dd = Dd { hi: 6.283185307179586, lo: 2.4492935982947064e-16 };
