//! Gauss-Legendre rules: fixed composite rules and a panel-doubling driver.

use std::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Composite rule on `[a, b]` with `panels` equal sub-intervals.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> CompositeRule {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * self.nodes.len());
        let mut weights = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                nodes.push(lo + (x + 1.0) * 0.5 * h);
                weights.push(w * 0.5 * h);
            }
        }
        CompositeRule { nodes, weights }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Outcome of [`integrate_doubling`].
#[derive(Clone, Debug)]
pub struct AdaptiveEstimate<T> {
    pub value: T,
    pub panels: usize,
    /// Max-abs change between the last two refinement levels.
    pub last_change: f64,
    pub converged: bool,
}

/// Panel-doubling refinement of a composite Gauss rule.
///
/// `estimate` maps a composite rule on `[a, b]` to a vector of estimates;
/// panels double from `start_panels` until every component changes by at
/// most `tol`, or `max_panels` is reached.
pub fn integrate_doubling<F>(
    a: f64,
    b: f64,
    order: usize,
    start_panels: usize,
    max_panels: usize,
    tol: f64,
    mut estimate: F,
) -> AdaptiveEstimate<Vec<f64>>
where
    F: FnMut(&CompositeRule) -> Vec<f64>,
{
    let gl = GaussLegendre::new(order);
    let mut panels = start_panels.max(1);
    let mut prev = estimate(&gl.composite(a, b, panels));
    loop {
        let next_panels = panels * 2;
        let next = estimate(&gl.composite(a, b, next_panels));
        let change = prev.iter().zip(&next).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        panels = next_panels;
        if change <= tol || panels >= max_panels {
            return AdaptiveEstimate {
                value: next,
                panels,
                last_change: change,
                converged: change <= tol,
            };
        }
        prev = next;
    }
}
