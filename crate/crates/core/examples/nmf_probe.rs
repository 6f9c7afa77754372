use genericity::groups::RngState;
use genericity::latent::{generate_nmf_instance, nmf_multiplicative};

fn main() {
    let mut hits_10k = 0;
    let mut hits_30k = 0;
    let runs = 20u64;
    for seed in 0..runs {
        let mut rng = RngState::new(54).derive(seed).rng();
        let inst = generate_nmf_instance(20, 50, 5, 0.1, 0.0, &mut rng);
        let fit = nmf_multiplicative(&inst.x, 5, 10000, 1e-10, &mut RngState::new(54).derive(seed + 100).rng()).unwrap();
        let rel10 = fit.loss_history.last().unwrap() / inst.x.norm();
        let fit = nmf_multiplicative(&inst.x, 5, 30000, 1e-12, &mut RngState::new(54).derive(seed + 100).rng()).unwrap();
        let rel30 = fit.loss_history.last().unwrap() / inst.x.norm();
        if rel10 < 1e-3 { hits_10k += 1; }
        if rel30 < 1e-3 { hits_30k += 1; }
        println!("seed {seed}: rel@10k {rel10:.2e}  rel@30k {rel30:.2e}");
    }
    println!("hits: 10k {hits_10k}/{runs}  30k {hits_30k}/{runs}");
}
