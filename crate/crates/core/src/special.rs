//! Bessel functions of the first kind at integer order.

/// `J_0(x) … J_nmax(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_orders(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = nmax.max(ax.ceil() as usize);
    let start = 2 * ((top + 20 + (40.0 * top as f64).sqrt() as usize) / 2 + 1);
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-30;
    let two_over_x = 2.0 / ax;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * vals[k] - vals[k + 1];
        vals[k - 1] = prev;
        if prev.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for (k, o) in out.iter_mut().enumerate() {
        let v = vals[k] / norm;
        *o = if x < 0.0 && k % 2 == 1 { -v } else { v };
    }
    out
}

/// `J_n(x)` for any integer order, using `J_{−n} = (−1)^n J_n`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let k = n.unsigned_abs() as usize;
    let v = bessel_j_orders(k, x)[k];
    if n < 0 && k % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Lookup table of `J_ν(x)` for `|ν| ≤ nmax` at a fixed argument.
#[derive(Debug, Clone)]
pub struct BesselTable {
    vals: Vec<f64>,
}

impl BesselTable {
    pub fn new(nmax: usize, x: f64) -> Self {
        Self { vals: bessel_j_orders(nmax, x) }
    }

    pub fn max_order(&self) -> usize {
        self.vals.len() - 1
    }

    /// `J_ν(x)`; orders beyond the table are treated as zero.
    pub fn get(&self, nu: i64) -> f64 {
        let k = nu.unsigned_abs() as usize;
        match self.vals.get(k) {
            Some(&v) if nu < 0 && k % 2 == 1 => -v,
            Some(&v) => v,
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // 20-digit values from an arbitrary-precision library.
    const REFERENCE: &[(i64, f64, f64)] = &[
        (0, 1.7, 0.397_984_859_446_109_491_14),
        (1, 1.7, 0.577_765_231_529_023_219_8),
        (2, 3.3, 0.478_031_686_450_545_899_63),
        (5, 2.5, 0.019_501_625_134_503_219_886),
        (10, 12.0, 0.300_476_035_271_269_310_73),
        (30, 6.0, 5.798_468_365_278_571_469_8e-19),
        (3, 0.001, 2.083_333_203_125_003_255_2e-11),
        (0, 25.0, 0.096_266_783_275_958_116_174),
        (7, 25.0, -0.010_168_168_212_703_074_178),
        (40, 30.0, 0.000_361_202_360_889_658_530_89),
        (1, 0.5, 0.242_268_457_674_873_886_38),
        (0, 0.1, 0.997_501_562_066_040_032_28),
    ];

    #[test]
    fn matches_reference_values() {
        for &(n, x, want) in REFERENCE {
            let got = bessel_j(n, x);
            assert!(((got - want) / want).abs() < 1e-12, "J_{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn zero_argument() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert_eq!(bessel_j(-1, 0.0), 0.0);
    }

    #[test]
    fn negative_order_and_argument() {
        assert!((bessel_j(-3, 2.0) + bessel_j(3, 2.0)).abs() < 1e-16);
        assert_eq!(bessel_j(-4, 2.0), bessel_j(4, 2.0));
        assert!((bessel_j(3, -2.0) + bessel_j(3, 2.0)).abs() < 1e-16);
    }

    #[test]
    fn table_lookup() {
        let t = BesselTable::new(10, 3.0);
        assert_eq!(t.max_order(), 10);
        assert!((t.get(-5) + bessel_j(5, 3.0)).abs() < 1e-16);
        assert_eq!(t.get(11), 0.0);
    }

    proptest! {
        #[test]
        fn sum_of_squares_is_one(x in 0.0f64..40.0) {
            let v = bessel_j_orders(120, x);
            let s = v[0] * v[0] + 2.0 * v[1..].iter().map(|j| j * j).sum::<f64>();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn three_term_recurrence(x in 0.05f64..30.0, n in 1i64..40) {
            let lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
            let rhs = 2.0 * n as f64 / x * bessel_j(n, x);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn neumann_addition(x in 0.0f64..15.0, y in 0.0f64..15.0, n in -5i64..5) {
            let s: f64 = (-90..=90).map(|k| bessel_j(k, x) * bessel_j(n - k, y)).sum();
            prop_assert!((s - bessel_j(n, x + y)).abs() < 1e-12);
        }
    }
}
