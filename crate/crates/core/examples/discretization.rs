//! Encode an action into a coarse-to-fine bin path and decode it back.

use c2fq::action_space::{decode_path, encode_action, final_precision, ActionSpaceSpec};

fn main() -> c2fq::Result<()> {
    let spec = ActionSpaceSpec::new(1, 3, 5)?;
    let action = [0.73];
    let path = encode_action(&action, &spec)?;
    let levels = decode_path(&path, &spec)?;
    println!("action {:?} -> bins {:?}", action, path.dim_digits(0));
    for l in 0..spec.levels {
        println!("  level {l}: centroid {:+.4}", levels.level(l)[0]);
    }
    println!("final precision {:.4}", final_precision(&spec)[0]);

    // Coarser lattices lose precision fast.
    for (levels, bins) in [(1, 5), (2, 5), (3, 5), (3, 9)] {
        let spec = ActionSpaceSpec::new(1, levels, bins)?;
        let back = decode_path(&encode_action(&action, &spec)?, &spec)?;
        println!(
            "L={levels} B={bins}: decoded {:+.4}, error {:.4}",
            back.last()[0],
            (back.last()[0] - action[0]).abs()
        );
    }
    Ok(())
}
