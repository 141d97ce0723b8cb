mod common;

use common::{dense_from_diagonal, dense_levi_civita, ExpQuadraticMetric};
use froblab::geometry::{christoffel_diagonal, curvature_components, DiagonalMetricSample, MetricSampler};
use froblab::numerics::rng;
use froblab::polyalg::C;
use rand::Rng;

#[test]
fn diagonal_formulas_match_dense_connection() {
    let mut r = rng(404);
    for trial in 0..8 {
        let n = 2 + trial % 3;
        let metric = ExpQuadraticMetric::random(n, &mut r);
        let u: Vec<C> = (0..n).map(|_| C::new(r.gen_range(-0.8..0.8), 0.0)).collect();
        let s = DiagonalMetricSample::at(&metric, &u).unwrap();
        assert!(s.stencil.analytic);
        let (g, dg, ddg) = dense_from_diagonal(&metric.jets(&u).unwrap());
        let (gamma, riem) = dense_levi_civita(&g, &dg, &ddg);
        let ch = christoffel_diagonal(&s);
        let rep = curvature_components(&s);
        let scale = 1.0 + riem.iter().flatten().flatten().flatten().map(|x| x.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    assert!((gamma[i][j][k] - ch.lower[i][j][k]).norm() < 1e-12, "Gamma {i}{j}{k}");
                    // Gamma^{ij}_k = -g^{ii} Gamma^j_{ik}
                    let up = -gamma[j][i][k] / g[i][i];
                    assert!((up - ch.upper[i][j][k]).norm() < 1e-12);
                    for l in 0..n {
                        let d = (riem[i][j][k][l] - rep.tensor[i][j][k][l]).norm();
                        assert!(d < 1e-9 * scale, "R^{i}{j}_{k}{l}: {d}");
                    }
                }
            }
        }
        assert!(rep.symmetry_residual < 1e-12);
    }
}
