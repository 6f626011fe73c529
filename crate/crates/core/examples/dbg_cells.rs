use dcphase::bench::{preset, run_trial, SolverKind};
use dcphase::sparse::SparseConfig;

fn main() {
    for k_cutoff in [25usize, 30, 35] {
        let mut t4 = preset("table4", 100, 42).unwrap();
        t4.ratios = vec![2.0, 2.5];
        t4.solver = SolverKind::L1Dc(SparseConfig {
            k_cutoff,
            ..SparseConfig::default()
        });
        let counts: Vec<usize> = (0..2)
            .map(|ri| (0..40).filter(|&t| run_trial(&t4, ri, 0, t).unwrap().success).count())
            .collect();
        println!("k_cutoff {k_cutoff}: 2.0 -> {}/40, 2.5 -> {}/40", counts[0], counts[1]);
    }
}
