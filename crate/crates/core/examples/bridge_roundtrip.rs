//! Serves the ground-truth estimator over TCP and queries it through the
//! bridge client, checking the answer against the in-process estimator.

use std::io::BufReader;
use std::net::TcpListener;
use std::time::Duration;

use dc2g::bridge::{serve_bridge, BridgeClient};
use dc2g::estimator::OracleEstimator;
use dc2g::planner::render_belief;
use dc2g::sim::SensorModel;
use dc2g::world::{generate_world, WorldSpec};
use dc2g::{Belief, CostToGoEstimator, Heading, Pose, SensorConfig};

pub fn run() -> anyhow::Result<bool> {
    let world = generate_world(&WorldSpec::with_seed(8, 50))?;
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?.to_string();
    let served = world.clone();
    let server = std::thread::spawn(move || -> anyhow::Result<()> {
        let mut oracle = OracleEstimator::new(served)?;
        let (stream, _) = listener.accept()?;
        serve_bridge(&mut oracle, BufReader::new(stream.try_clone()?), stream)?;
        Ok(())
    });
    let mut remote = BridgeClient::connect_tcp(&addr, Duration::from_secs(10))?;
    let mut local = OracleEstimator::new(world.clone())?;
    let mut belief = Belief::blank_like(&world.grid);
    let pose = Pose { cell: world.cells_of_class("road")[5], heading: Heading::N };
    belief.observe(&world.grid, pose, &SensorModel::new(SensorConfig::default()));
    let image = render_belief(&belief);
    let same = remote.estimate(&image)? == local.estimate(&image)?;
    println!("bridge answer identical to in-process estimate: {same}");
    drop(remote);
    server.join().expect("server thread")?;
    Ok(same)
}

fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
