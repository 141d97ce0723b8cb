//! Shared helpers for integration tests: independent oracles and samplers.
#![allow(dead_code)]

use froblab::geometry::{MetricJets, MetricSampler, GeomError};
use froblab::polyalg::C;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(x: f64) -> C {
    C::new(x, 0.0)
}

/// `g_ii = c_i exp(q_i(u))` with random quadratic `q_i`; exact jets.
pub struct ExpQuadraticMetric {
    pub c: Vec<f64>,
    pub lin: Vec<Vec<f64>>,
    pub quad: Vec<Vec<Vec<f64>>>,
}

impl ExpQuadraticMetric {
    pub fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let c = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * rng.gen_range(0.5..2.0)).collect();
        let lin = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let quad = (0..n)
            .map(|_| {
                let mut q = vec![vec![0.0; n]; n];
                for k in 0..n {
                    for l in k..n {
                        let v = rng.gen_range(-0.5..0.5);
                        q[k][l] = v;
                        q[l][k] = v;
                    }
                }
                q
            })
            .collect();
        ExpQuadraticMetric { c, lin, quad }
    }

    fn q(&self, i: usize, u: &[C]) -> (C, Vec<C>) {
        let n = u.len();
        let mut v = c(0.0);
        let mut d = vec![c(0.0); n];
        for k in 0..n {
            v += u[k] * self.lin[i][k];
            d[k] += c(self.lin[i][k]);
            for l in 0..n {
                v += u[k] * u[l] * (0.5 * self.quad[i][k][l]);
                d[k] += u[l] * self.quad[i][k][l];
            }
        }
        (v, d)
    }
}

impl MetricSampler for ExpQuadraticMetric {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn metric(&self, u: &[C]) -> Result<Vec<C>, GeomError> {
        Ok((0..u.len()).map(|i| self.q(i, u).0.exp() * self.c[i]).collect())
    }
    fn jets(&self, u: &[C]) -> Option<MetricJets> {
        let n = u.len();
        let mut g = vec![c(0.0); n];
        let mut dg = vec![vec![c(0.0); n]; n];
        let mut ddg = vec![vec![vec![c(0.0); n]; n]; n];
        for i in 0..n {
            let (q, dq) = self.q(i, u);
            g[i] = q.exp() * self.c[i];
            for k in 0..n {
                dg[k][i] = g[i] * dq[k];
                for l in 0..n {
                    ddg[k][l][i] = g[i] * (dq[k] * dq[l] + self.quad[i][k][l]);
                }
            }
        }
        Some(MetricJets { g, dg, ddg })
    }
}

/// Dense Levi-Civita connection and Riemann tensor for a metric matrix with
/// exact first and second derivatives. Returns `(Gamma^i_{jk}, R^{ij}_{kl})`
/// with `R(d_k,d_l) d_s = R^j_{skl} d_j` and `R^{ij}_{kl} = G^{is} R^j_{skl}`.
pub fn dense_levi_civita(
    g: &[Vec<C>],
    dg: &[Vec<Vec<C>>],
    ddg: &[Vec<Vec<Vec<C>>>],
) -> (Vec<Vec<Vec<C>>>, Vec<Vec<Vec<Vec<C>>>>) {
    let n = g.len();
    let z = c(0.0);
    let gi = invert(g);
    // d_m G^{-1} = -G^{-1} (d_m G) G^{-1}
    let dgi: Vec<Vec<Vec<C>>> = (0..n).map(|m| {
        let t = matmul(&matmul(&gi, &dg[m]), &gi);
        t.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
    }).collect();
    let lower = |j: usize, k: usize, l: usize, d: &dyn Fn(usize, usize, usize) -> C| -> C {
        // [jk, l] = 1/2 (d_j G_lk + d_k G_lj - d_l G_jk)
        (d(j, l, k) + d(k, l, j) - d(l, j, k)) * 0.5
    };
    let d1 = |m: usize, a: usize, b: usize| dg[m][a][b];
    let mut gamma = vec![vec![vec![z; n]; n]; n];
    let mut dgamma = vec![vec![vec![vec![z; n]; n]; n]; n]; // [m][i][j][k]
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = z;
                for l in 0..n {
                    v += gi[i][l] * lower(j, k, l, &d1);
                }
                gamma[i][j][k] = v;
                for m in 0..n {
                    let d2 = |a: usize, b: usize, cc: usize| ddg[m][a][b][cc];
                    let mut w = z;
                    for l in 0..n {
                        w += dgi[m][i][l] * lower(j, k, l, &d1) + gi[i][l] * lower(j, k, l, &d2);
                    }
                    dgamma[m][i][j][k] = w;
                }
            }
        }
    }
    // R^r_{s k l} = d_k Gamma^r_{l s} - d_l Gamma^r_{k s} + Gamma^r_{k p} Gamma^p_{l s} - Gamma^r_{l p} Gamma^p_{k s}
    let mut riem = vec![vec![vec![vec![z; n]; n]; n]; n];
    for r in 0..n {
        for s in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dgamma[k][r][l][s] - dgamma[l][r][k][s];
                    for p in 0..n {
                        v += gamma[r][k][p] * gamma[p][l][s] - gamma[r][l][p] * gamma[p][k][s];
                    }
                    riem[r][s][k][l] = v;
                }
            }
        }
    }
    let mut up = vec![vec![vec![vec![z; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = z;
                    for s in 0..n {
                        v += gi[i][s] * riem[j][s][k][l];
                    }
                    up[i][j][k][l] = v;
                }
            }
        }
    }
    (gamma, up)
}

/// Diagonal jets laid out as dense matrices for [`dense_levi_civita`].
pub fn dense_from_diagonal(j: &MetricJets) -> (Vec<Vec<C>>, Vec<Vec<Vec<C>>>, Vec<Vec<Vec<Vec<C>>>>) {
    let n = j.g.len();
    let z = c(0.0);
    let diag = |v: &dyn Fn(usize) -> C| -> Vec<Vec<C>> {
        (0..n).map(|a| (0..n).map(|b| if a == b { v(a) } else { z }).collect()).collect()
    };
    let g = diag(&|a| j.g[a]);
    let dg = (0..n).map(|m| diag(&|a| j.dg[m][a])).collect();
    let ddg = (0..n).map(|m| (0..n).map(|p| diag(&|a| j.ddg[m][p][a])).collect()).collect();
    (g, dg, ddg)
}

fn matmul(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

fn invert(a: &[Vec<C>]) -> Vec<Vec<C>> {
    froblab::numerics::inverse(a).expect("invertible metric")
}
