//! The `estimate-angle` subcommand: print the dominant streak angle.

use videorain::direction;

use crate::video::load_video;
use crate::EstimateAngleArgs;

pub fn run(args: EstimateAngleArgs) -> anyhow::Result<()> {
    let clip = load_video(&args.input)?;
    let angle = direction::estimate_angle(&clip);
    println!("theta_deg={:.2}", angle.degrees());
    println!("confidence={:.4}", angle.confidence());
    Ok(())
}
