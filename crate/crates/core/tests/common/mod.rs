#![allow(dead_code)]

use moreau::{ExtReal, Grid, GridFn, Kernel};
use rand::Rng;

pub const QUANT: [f64; 8] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, f64::INFINITY];

pub struct SmallInstance {
    pub kernel: Kernel,
    pub rows: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    pub xprime: Vec<usize>,
}

impl SmallInstance {
    pub fn g_fn(&self) -> GridFn {
        GridFn::from_f64(self.kernel.x_grid().clone(), &self.g).unwrap()
    }
}

fn line(n: usize) -> Grid {
    Grid::line(0.0, (n - 1) as f64, n).unwrap()
}

/// Kernel entries in {-1, 0, 1, -inf}, g in {-2..2, +inf} with the odd -inf.
pub fn small_instance<R: Rng>(rng: &mut R) -> SmallInstance {
    let nx = rng.random_range(1..=5);
    let ny = rng.random_range(1..=5);
    let rows = loop {
        let rows: Vec<Vec<f64>> = (0..nx)
            .map(|_| {
                (0..ny)
                    .map(|_| match rng.random_range(0..5) {
                        0 | 1 => f64::NEG_INFINITY,
                        v => (v - 3) as f64,
                    })
                    .collect()
            })
            .collect();
        let row_ok = rows.iter().all(|r| r.iter().any(|v| v.is_finite()));
        let col_ok = (0..ny).all(|j| rows.iter().any(|r| r[j].is_finite()));
        if row_ok && col_ok {
            break rows;
        }
    };
    let g: Vec<f64> = (0..nx)
        .map(|_| match rng.random_range(0..12) {
            0 | 1 => f64::INFINITY,
            2 if rng.random_bool(0.3) => f64::NEG_INFINITY,
            v => ((v % 5) as f64) - 2.0,
        })
        .collect();
    let xprime: Vec<usize> = if rng.random_bool(0.7) {
        (0..nx).collect()
    } else {
        (0..nx).filter(|_| rng.random_bool(0.6)).collect()
    };
    let table: Vec<Vec<ExtReal>> = rows.iter().map(|r| r.iter().map(|&v| ExtReal::new(v)).collect()).collect();
    let kernel = Kernel::table(line(nx), line(ny), table).unwrap();
    SmallInstance { kernel, rows, g, xprime }
}

/// `Bf(x) = max_y b(x,y) - f(y)` on plain floats, `-inf` absorbing.
pub fn naive_conjugate(rows: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(f)
                .map(|(&b, &fy)| if b == f64::NEG_INFINITY || fy == f64::INFINITY { f64::NEG_INFINITY } else { b - fy })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Number of `f ∈ QUANT^|Y|` with `Bf ≤ g` and `Bf = g` on `X'`.
pub fn count_preimages(inst: &SmallInstance) -> usize {
    let ny = inst.rows[0].len();
    let total = QUANT.len().pow(ny as u32);
    let mut f = vec![0.0; ny];
    let mut count = 0;
    for code in 0..total {
        let mut c = code;
        for v in f.iter_mut() {
            *v = QUANT[c % QUANT.len()];
            c /= QUANT.len();
        }
        let bf = naive_conjugate(&inst.rows, &f);
        let le = bf.iter().zip(&inst.g).all(|(a, b)| a <= b);
        let eq = inst.xprime.iter().all(|&x| bf[x] == inst.g[x]);
        if le && eq {
            count += 1;
        }
    }
    count
}
