//! One lane group stepping through extend and unwound sums next to the
//! serial permutation-weight state.

use std::error::Error;

use pathshap::engine::LaneGroup;
use pathshap::reference::PathState;

pub fn run_example() -> Result<u64, Box<dyn Error>> {
    let d = [-1, 3, 0, 5];
    let z = [1.0, 0.4, 0.75, 0.5];
    let o = [1.0, 1.0, 0.0, 1.0];

    let mut group = LaneGroup::new(&d, &z, &o);
    let mut serial = PathState::new().extend(1.0, 1.0, -1);
    for k in 1..d.len() {
        group.extend_next();
        serial = serial.extend(z[k], o[k], d[k]);
        println!("depth {}: lanes {:?}", k + 1, group.weights());
        println!("         serial {:?}", serial.weights());
    }
    let sums = group.parallel_unwound_sum();
    for lane in 1..d.len() {
        println!("feature {} unwound sum {} (serial {})", d[lane], sums[lane], serial.unwound_sum(lane));
    }
    println!("{} shuffles", group.shuffles());
    Ok(group.shuffles())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
