//! Continuous transfer functions discretized with the bilinear (Tustin) map.

use super::dual::Scalar;

/// Coefficients of `(1 - z^-1)^p (1 + z^-1)^(n - p)`, lowest power of `z^-1` first.
fn tustin_basis(n: usize, p: usize) -> Vec<f64> {
    let mut poly = vec![1.0];
    let mut mul = |factor: f64| {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] += factor * c;
        }
        poly = next;
    };
    for _ in 0..p {
        mul(-1.0);
    }
    for _ in 0..(n - p) {
        mul(1.0);
    }
    poly
}

/// Polynomial product, coefficients highest power first.
pub fn polymul<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out = vec![S::constant(0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Discrete filter in transposed direct form II.
#[derive(Debug, Clone)]
pub struct Block<S> {
    b: Vec<S>,
    a: Vec<S>,
    state: Vec<S>,
}

impl<S: Scalar> Block<S> {
    /// Bilinear map of `num(s)/den(s)` at sample rate `fs`. Coefficients are given
    /// highest power of `s` first; `num` may be shorter than `den` (proper transfer function).
    pub fn bilinear(num: &[S], den: &[S], fs: f64) -> Self {
        assert!(num.len() <= den.len(), "transfer function must be proper");
        let n = den.len() - 1;
        let zero = S::constant(0.0);
        let pad = den.len() - num.len();
        let mut b = vec![zero; n + 1];
        let mut a = vec![zero; n + 1];
        let c = 2.0 * fs;
        for i in 0..=n {
            let p = n - i;
            let scale = c.powi(p as i32);
            let basis = tustin_basis(n, p);
            let num_i = if i >= pad { Some(num[i - pad]) } else { None };
            for (k, &w) in basis.iter().enumerate() {
                if let Some(v) = num_i {
                    b[k] += v * (w * scale);
                }
                a[k] += den[i] * (w * scale);
            }
        }
        let a0 = a[0];
        for v in b.iter_mut().chain(a.iter_mut()) {
            *v = *v / a0;
        }
        Block {
            b,
            a,
            state: vec![zero; n],
        }
    }

    #[inline]
    pub fn step(&mut self, x: S) -> S {
        let n = self.state.len();
        if n == 0 {
            return self.b[0] * x;
        }
        let y = self.b[0] * x + self.state[0];
        for i in 0..n - 1 {
            self.state[i] = self.b[i + 1] * x - self.a[i + 1] * y + self.state[i + 1];
        }
        self.state[n - 1] = self.b[n] * x - self.a[n] * y;
        y
    }

    pub fn numerator(&self) -> &[S] {
        &self.b
    }

    pub fn denominator(&self) -> &[S] {
        &self.a
    }
}
