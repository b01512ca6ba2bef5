use std::time::Instant;
use vemstokes::mesh::{generate, Domain, Family};
use vemstokes::system::{assemble, solve_eigs, SolverConfig};

fn main() {
    for n in [32usize, 64, 128] {
        let t0 = Instant::now();
        let mesh = generate(Domain::Square, Family::T1, n, 0).unwrap();
        let t1 = Instant::now();
        let sys = assemble(&mesh, &SolverConfig::default()).unwrap();
        let t2 = Instant::now();
        let f = sys.factor(0.0).unwrap();
        let t3 = Instant::now();
        let sol = solve_eigs(&sys, 4, 0.0).unwrap();
        let t4 = Instant::now();
        println!(
            "N={n:4} ({} unknowns, factor nnz {}): mesh {:.2}s assemble {:.2}s factor {:.2}s solve {:.2}s lambda1 {:.4}",
            sys.dofs.total,
            f.nnz_factor(),
            (t1 - t0).as_secs_f64(),
            (t2 - t1).as_secs_f64(),
            (t3 - t2).as_secs_f64(),
            (t4 - t3).as_secs_f64(),
            sol.pairs[0].lambda,
        );
    }
}
