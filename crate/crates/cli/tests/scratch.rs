use grm_core::analysis::*;
use grm_core::config::ParameterSet;
use grm_core::pipeline::generate;

const HOUR: f64 = 3600.0;

#[test]
fn criterion9_preview() {
    for seed in [42u64, 1, 7, 11, 23] {
        let mut params = ParameterSet::new(100, 500);
        params.seed = seed;
        let s = generate(&params).unwrap();
        let e = extract_parameters(&s.trace, HOUR, 2).unwrap();
        println!("seed {seed}: alpha_size {:?} alpha_dur {:?} top_k {:?}",
            e.size.as_ref().map(|f| (f.alpha * 100.0).round() / 100.0),
            e.duration.as_ref().map(|f| (f.alpha * 100.0).round() / 100.0),
            e.k_shares.as_ref().map(|s| (s[0].0 / 3600.0, (s[0].1 * 100.0).round() / 100.0)));
    }
}
