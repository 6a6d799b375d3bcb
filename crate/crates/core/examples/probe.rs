use padic_orbital::group::catalog;
use padic_orbital::kernel::{verify_theorem, OrbitSpec};
use padic_orbital::lattice::qvec_from_i64;

fn main() {
    let spec = OrbitSpec::new(catalog("glnxgln:2").unwrap(), 2, 50_000_000).unwrap();
    for (a, n) in [
        (vec![0i64, 0, 0, 0], 1i64),
        (vec![1, 0, 0, 1], 1),
        (vec![1, 0, 0, 0], 1),
    ] {
        let t0 = std::time::Instant::now();
        match verify_theorem(&spec, &qvec_from_i64(&a), n, 4) {
            Ok(rep) => println!(
                "a={:?} n={} eq={:?} cells={} refined={} closed={} [{:?}]\n  lhs={}\n  rhs={}",
                a, n, rep.eq, rep.stats.cells, rep.stats.refined, rep.stats.closed,
                t0.elapsed(), rep.lhs, rep.rhs
            ),
            Err(e) => println!("a={:?} n={} ERROR {e} [{:?}]", a, n, t0.elapsed()),
        }
    }
}
