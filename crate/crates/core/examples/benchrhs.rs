use muskat_core::*;
use std::time::Instant;
fn main() {
    let tau = 2.0*std::f64::consts::PI;
    let g = GridSpec::square(128, tau).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let c = std::f64::consts::PI;
    let f = ScalarField::from_fn(g, |x, y| 0.1*(-(((x-c).powi(2)+(y-c).powi(2))/2.0)).exp());
    for (name, m, eco) in [("split", RhsMethod::SplitSpectral{quad_refinement: 3}, false),
                      ("split-eco", RhsMethod::SplitSpectral{quad_refinement: 3}, true),
                      ("series8", RhsMethod::SeriesTruncated{n_max: 8}, false),
                      ("direct", RhsMethod::DirectQuadrature{cutoff_cells: 1}, false)] {
        let t0 = Instant::now();
        let ev = RhsEvaluator::with_economy(g, ap, m, eco).unwrap();
        let build = t0.elapsed();
        let t1 = Instant::now();
        let mut acc = 0.0;
        let n = 3;
        for _ in 0..n { let r = ev.rhs(&f).unwrap(); acc += r.values[0]; }
        println!("{name}: build {:?}, rhs {:?}/eval (acc {acc:e})", build, t1.elapsed()/n);
    }
}
// economy-mode timing appended by the benchmark driver below
