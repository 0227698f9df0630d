mod common;

use probe_core::checker::{conditional_value, SolverConfig};
use probe_core::frontend::OptMode;
use probe_core::parametric::{eliminate, instantiate};
use probe_core::Number;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{full_model, random_chain, random_valuation};

#[test]
fn elimination_agrees_with_instantiation_on_random_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolverConfig::default();
    let mut defined = 0;
    for _ in 0..200 {
        let (src, prop) = random_chain(&mut rng);
        let m = full_model(&src, &prop);
        let e = eliminate(&m).unwrap();
        for _ in 0..3 {
            let u = random_valuation(&mut rng);
            let symbolic = e.value_at(&u).unwrap();
            let concrete = conditional_value(&instantiate(&m, &u).unwrap(), OptMode::Min, &cfg).unwrap();
            let concrete = concrete.value.map(|v| match v {
                Number::Exact(r) => r,
                Number::Float(_) => panic!("small models are solved exactly"),
            });
            assert_eq!(symbolic, concrete, "at {u:?}\n{prop}\n{src}");
            defined += usize::from(symbolic.is_some());
        }
    }
    assert!(defined > 300, "only {defined} defined samples");
}
