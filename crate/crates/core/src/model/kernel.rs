//! Stationary distribution of a single dyad and the cumulants of its
//! sufficient statistics.
//!
//! A directed dyad has four states `(g_ij, g_ji)` and sufficient statistics
//! `(g_ij, g_ji, g_ij g_ji)` with natural parameters `(B_ij, B_ji, C_ij)`.
//! An undirected dyad has two states and the single statistic `g*_ij`.
//! Because the family is exponential, derivatives of the mean with respect to
//! the natural parameters are cumulants: the covariance is the Jacobian of the
//! means, the third cumulant its derivative, and so on. Every analytic
//! derivative in the crate is taken from here.

/// Number of sufficient statistics per dyad, at most three.
pub const MAX_STATS: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    stats: usize,
    states: usize,
    prob: [f64; 4],
    log_partition: f64,
    mean: [f64; MAX_STATS],
    /// Centred statistic per state, computed from complementary probabilities
    /// so that tail probabilities keep full relative precision.
    dev: [[f64; MAX_STATS]; 4],
    cov: [[f64; MAX_STATS]; MAX_STATS],
}

// State order for directed dyads: (0,0), (1,0), (0,1), (1,1).
const DIRECTED_STATS: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [1.0, 1.0, 1.0],
];

impl Kernel {
    /// Four-state kernel for natural parameters `(B_ij, B_ji, C_ij)`.
    pub fn directed(b_ij: f64, b_ji: f64, c: f64) -> Self {
        let e = [0.0, b_ij, b_ji, b_ij + b_ji + c];
        let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut w = [0.0; 4];
        let mut total = 0.0;
        for s in 0..4 {
            w[s] = (e[s] - m).exp();
            total += w[s];
        }
        let prob = w.map(|x| x / total);
        let [p00, p10, p01, p11] = prob;
        let p1 = p10 + p11;
        let p2 = p01 + p11;
        let q1 = p00 + p01;
        let q2 = p00 + p10;
        let q3 = p00 + p10 + p01;
        let mean = [p1, p2, p11];
        let compl = [q1, q2, q3];
        let mut dev = [[0.0; MAX_STATS]; 4];
        for s in 0..4 {
            for a in 0..3 {
                dev[s][a] = if DIRECTED_STATS[s][a] == 1.0 {
                    compl[a]
                } else {
                    -mean[a]
                };
            }
        }
        let c12 = p11 * p00 - p10 * p01;
        let cov = [
            [p1 * q1, c12, p11 * q1],
            [c12, p2 * q2, p11 * q2],
            [p11 * q1, p11 * q2, p11 * q3],
        ];
        Self {
            stats: 3,
            states: 4,
            prob,
            log_partition: m + total.ln(),
            mean,
            dev,
            cov,
        }
    }

    /// Two-state kernel for an undirected dyad with index `v`.
    pub fn undirected(v: f64) -> Self {
        let m = v.max(0.0);
        let w0 = (-m).exp();
        let w1 = (v - m).exp();
        let total = w0 + w1;
        let p0 = w0 / total;
        let p1 = w1 / total;
        let mut dev = [[0.0; MAX_STATS]; 4];
        dev[0][0] = -p1;
        dev[1][0] = p0;
        let mut cov = [[0.0; MAX_STATS]; MAX_STATS];
        cov[0][0] = p1 * p0;
        Self {
            stats: 1,
            states: 2,
            prob: [p0, p1, 0.0, 0.0],
            log_partition: m + total.ln(),
            mean: [p1, 0.0, 0.0],
            dev,
            cov,
        }
    }

    #[inline]
    pub fn stats(&self) -> usize {
        self.stats
    }

    #[inline]
    pub fn prob(&self, state: usize) -> f64 {
        self.prob[state]
    }

    pub fn probs(&self) -> [f64; 4] {
        self.prob
    }

    #[inline]
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// Log-probability of `state`, from the exponent and the log partition.
    #[inline]
    pub fn log_prob(&self, state: usize, nu: &[f64; MAX_STATS]) -> f64 {
        let exponent = if self.states == 4 {
            match state {
                0 => 0.0,
                1 => nu[0],
                2 => nu[1],
                _ => nu[0] + nu[1] + nu[2],
            }
        } else if state == 1 {
            nu[0]
        } else {
            0.0
        };
        exponent - self.log_partition
    }

    /// Expected statistic vector (`p_ij`, `p_ji`, `p_ij^(11)` for directed dyads).
    #[inline]
    pub fn mean(&self) -> &[f64; MAX_STATS] {
        &self.mean
    }

    /// Statistic vector of a state.
    #[inline]
    pub fn state_stats(&self, state: usize) -> [f64; MAX_STATS] {
        if self.states == 4 {
            DIRECTED_STATS[state]
        } else {
            [state as f64, 0.0, 0.0]
        }
    }

    /// Covariance of the statistics, the Jacobian of [`Kernel::mean`].
    #[inline]
    pub fn cov(&self, a: usize, b: usize) -> f64 {
        self.cov[a][b]
    }

    /// Third joint cumulant, the derivative of `cov(a, b)` in natural parameter `c`.
    pub fn cum3(&self, a: usize, b: usize, c: usize) -> f64 {
        (0..self.states)
            .map(|s| self.prob[s] * self.dev[s][a] * self.dev[s][b] * self.dev[s][c])
            .sum()
    }

    /// Fourth joint cumulant, the derivative of `cum3(a, b, c)` in natural parameter `d`.
    pub fn cum4(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m4: f64 = (0..self.states)
            .map(|s| {
                let v = &self.dev[s];
                self.prob[s] * v[a] * v[b] * v[c] * v[d]
            })
            .sum();
        let k = &self.cov;
        m4 - k[a][b] * k[c][d] - k[a][c] * k[b][d] - k[a][d] * k[b][c]
    }

    /// All third cumulants `[a][b][c]`.
    pub fn cum3_all(&self) -> [[[f64; MAX_STATS]; MAX_STATS]; MAX_STATS] {
        let mut out = [[[0.0; MAX_STATS]; MAX_STATS]; MAX_STATS];
        let s = self.stats;
        for a in 0..s {
            for b in a..s {
                for c in b..s {
                    let v = self.cum3(a, b, c);
                    for (x, y, z) in [
                        (a, b, c),
                        (a, c, b),
                        (b, a, c),
                        (b, c, a),
                        (c, a, b),
                        (c, b, a),
                    ] {
                        out[x][y][z] = v;
                    }
                }
            }
        }
        out
    }
}
