//! Generate expert demonstrations, write them to disk and read them back.

use c2fq::env::{gen_demo_dataset, EnvId};
use c2fq::replay::{load_demos, save_demos, ActionScaler};

fn main() -> c2fq::Result<()> {
    let demos = gen_demo_dataset(EnvId::PointmassReach, 10, 0, 0.005)?;
    let path = std::env::temp_dir().join("c2fq-pointmass-demos.jsonl");
    save_demos(&path, &demos)?;
    let loaded = load_demos(&path)?;
    assert_eq!(loaded, demos);

    let lengths: Vec<usize> = loaded.iter().map(|e| e.len()).collect();
    println!("{} episodes at {}, lengths {:?}", loaded.len(), path.display(), lengths);
    let scaler = ActionScaler::fit(&loaded)?;
    println!("action range min {:?} max {:?}", scaler.min, scaler.max);
    let first = &loaded[0].transitions[0];
    println!("first action {:?} scaled {:?}", first.action, scaler.apply(&first.action));
    Ok(())
}
