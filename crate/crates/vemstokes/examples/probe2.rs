use rayon::prelude::*;
use vemstokes::adapt::fit_order;
use vemstokes::mesh::{generate, Domain, Family};
use vemstokes::system::{assemble, solve_eigs, Bc, SolverConfig};

fn solve(domain: Domain, family: Family, n: usize, seed: u64, alpha: f64, bc: Bc, k: usize) -> Vec<f64> {
    let mesh = generate(domain, family, n, seed).unwrap();
    let cfg = SolverConfig {
        alpha,
        bc,
        ..SolverConfig::default()
    };
    let sys = assemble(&mesh, &cfg).unwrap();
    solve_eigs(&sys, k, 0.0).unwrap().lambdas()
}

fn main() {
    let h = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];

    // criterion 4: families T2-T5 on the clamped square
    let reference = [13.086, 23.031, 23.031, 32.053];
    for family in [Family::T2, Family::T3, Family::T4, Family::T5] {
        let spectra: Vec<Vec<f64>> = [16usize, 32, 64]
            .par_iter()
            .map(|&n| solve(Domain::Square, family, n, 42, 1.0, Bc::Clamped, 4))
            .collect();
        print!("C4 {family:?}: ");
        for mode in 0..4 {
            let series: Vec<f64> = spectra.iter().map(|s| s[mode]).collect();
            let fit = fit_order(&h, &series).unwrap();
            let dev = (fit.extrapolated - reference[mode]) / reference[mode];
            print!(
                "m{mode}: extr {:.4} ({:+.4}%) ord {:.2} | ",
                fit.extrapolated,
                dev * 100.0,
                fit.rate
            );
        }
        println!();
    }

    // criterion 5: disk
    let spectra: Vec<Vec<f64>> = [16usize, 32, 64]
        .par_iter()
        .map(|&n| solve(Domain::Disk, Family::T2, n, 42, 1.0, Bc::Clamped, 5))
        .collect();
    for (mode, target) in [(0usize, 14.6834), (3, 40.7143)] {
        let series: Vec<f64> = spectra.iter().map(|s| s[mode]).collect();
        let fit = fit_order(&h, &series).unwrap();
        println!(
            "C5 disk mode {}: series {:?} extr {:.4} vs {target} ({:+.4}%) ord {:.2}",
            mode + 1,
            series.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            fit.extrapolated,
            (fit.extrapolated - target) / target * 100.0,
            fit.rate
        );
    }

    // criterion 6: mixed bc order study
    let hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let table = [2.4692, 2.4678, 2.4675];
    let l1: Vec<f64> = [32usize, 64, 128]
        .par_iter()
        .map(|&n| solve(Domain::UnitSquare, Family::T1, n, 0, 1.0, Bc::MixedBottomClamped, 2)[0])
        .collect();
    let fit = fit_order(&hs, &l1).unwrap();
    println!(
        "C6 alpha=1 lambda1: {:?} vs {:?}, rel {:?}, ord {:.2}",
        l1.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
        table,
        l1.iter()
            .zip(table)
            .map(|(a, t)| format!("{:+.4}%", (a - t) / t * 100.0))
            .collect::<Vec<_>>(),
        fit.rate
    );
    let l2soft: Vec<f64> = [32usize, 64, 128]
        .par_iter()
        .map(|&n| {
            solve(Domain::UnitSquare, Family::T1, n, 0, 1.0 / 16.0, Bc::MixedBottomClamped, 2)[1]
        })
        .collect();
    let fit2 = fit_order(&hs, &l2soft).unwrap();
    println!("C6 alpha=1/16 lambda2: {l2soft:?}, ord {:.2}", fit2.rate);

    // criterion 7: sweep counts
    for alpha in [0.1, 1.0] {
        let l = solve(Domain::UnitSquare, Family::T1, 11, 0, alpha, Bc::MixedBottomClamped, 10);
        let count = l.iter().filter(|&&x| x > 2.5 && x < 7.0).count();
        println!(
            "C7 alpha={alpha}: spectrum {:?} -> count in (2.5, 7.0) = {count}",
            l.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()
        );
    }
}
