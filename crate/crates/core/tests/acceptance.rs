use legendrian_core::selftest::{SelftestConfig, Suite};

#[test]
fn acceptance() {
    let suite = Suite::new(SelftestConfig::default());
    println!();
    let start = std::time::Instant::now();
    let outcomes = suite.run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let total = start.elapsed().as_secs_f64();
    println!("total {total:.1} s");
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(total < 60.0, "suite took {total:.1} s");
}
