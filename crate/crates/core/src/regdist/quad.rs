//! Globally adaptive Gauss-Kronrod (7, 15) quadrature for small vector integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub(crate) const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Panel<const K: usize> {
    a: f64,
    b: f64,
    val: [f64; K],
    err: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// The error of a panel is measured on component 0 and on the norm of the rest.
fn gk15<const K: usize, F: FnMut(f64) -> [f64; K]>(f: &mut F, a: f64, b: f64) -> Panel<K> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; K];
    let mut g = [0.0; K];
    let fc = f(c);
    for m in 0..K {
        k[m] = WGK[7] * fc[m];
        g[m] = WG[3] * fc[m];
    }
    for n in 0..7 {
        let dx = h * XGK[n];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for m in 0..K {
            let s = f1[m] + f2[m];
            k[m] += WGK[n] * s;
            if n % 2 == 1 {
                g[m] += WG[n / 2] * s;
            }
        }
    }
    let mut val = [0.0; K];
    let mut e0 = 0.0;
    let mut rest = 0.0;
    for m in 0..K {
        val[m] = k[m] * h;
        let e = ((k[m] - g[m]) * h).abs();
        if m == 0 {
            e0 = e;
        } else {
            rest += e * e;
        }
    }
    Panel { a, b, val, err: e0.max(rest.sqrt()) }
}

/// Integrates `f` over the panels delimited by the sorted `breaks`, bisecting
/// the worst panel until the summed error estimate drops below
/// `rel_tol * scale`, where `scale` is the magnitude of the current total.
/// Returns the integral and the final error estimate.
pub(crate) fn integrate<const K: usize, F: FnMut(f64) -> [f64; K]>(
    mut f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> ([f64; K], f64) {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1]));
        }
    }
    let totals = |heap: &BinaryHeap<Panel<K>>| {
        let mut v = [0.0; K];
        let mut e = 0.0;
        for p in heap.iter() {
            for m in 0..K {
                v[m] += p.val[m];
            }
            e += p.err;
        }
        (v, e)
    };
    loop {
        let (v, e) = totals(&heap);
        let scale = v[0].abs().max(v[1..].iter().map(|x| x * x).sum::<f64>().sqrt());
        if e <= (rel_tol * scale).max(abs_tol) || heap.len() >= MAX_PANELS {
            return (v, e);
        }
        let Some(worst) = heap.pop() else {
            return (v, e);
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&mut f, worst.a, mid));
        heap.push(gk15(&mut f, mid, worst.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_integrate_constants() {
        let s: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-14);
        let g: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lorentzian_peak() {
        let h = 1e-4;
        let ([v], _) = integrate(|t| [1.0 / (t * t + h * h)], &[-1.0, 0.0, 1.0], 1e-12, 0.0);
        let exact = 2.0 * (1.0 / h).atan() / h;
        assert!((v - exact).abs() < 1e-9 * exact, "{v} vs {exact}");
    }

    #[test]
    fn polynomial_is_exact() {
        let ([v, w], _) = integrate(|t| [t.powi(6), t.powi(3)], &[0.0, 2.0], 1e-14, 0.0);
        assert!((v - 128.0 / 7.0).abs() < 1e-12);
        assert!((w - 4.0).abs() < 1e-12);
    }
}
