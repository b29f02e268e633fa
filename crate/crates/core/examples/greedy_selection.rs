//! Greedy level-by-level action selection with a randomly initialized critic.

use c2fq::agent::{Agent, AgentConfig, Mode};
use c2fq::critic::Side;

fn main() -> c2fq::Result<()> {
    let config = AgentConfig {
        hidden: vec![32, 32],
        seed: 3,
        ..Default::default()
    };
    let mut agent = Agent::new(config, 4, 2, None)?;
    let obs = [0.2, -0.4, 0.7, 0.1];

    let choice = agent.eval_action(&obs)?;
    for l in 0..choice.levels.levels() {
        println!("level {l}: bins {:?} -> {:?}", choice.path.level(l), choice.levels.level(l));
    }
    println!("greedy action {:?}", choice.action);

    let values = agent.q_of_action(&obs, &choice.action, Side::Online)?;
    println!("Q per level and dim {:?}", values.q);

    for _ in 0..3 {
        let noisy = agent.select_action(&obs, Mode::Train)?;
        println!("exploration sample {:?}", noisy.action);
    }
    Ok(())
}
