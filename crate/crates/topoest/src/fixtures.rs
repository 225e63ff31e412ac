//! Bundled test-system fixtures.

use crate::grid::{parse_grid, parse_plan, NetworkModel, SwitchPlan};

/// Raw text of the modified 33-bus feeder fixture (grid file format).
pub fn ieee33_grid_text() -> &'static str {
    include_str!("../fixtures/ieee33.grid")
}

/// Raw text of the bundled switching plan: radial until t = 440 s, then
/// ties 0..2 close simultaneously.
pub fn fig3_plan_text() -> &'static str {
    include_str!("../fixtures/fig3.plan")
}

/// Parses the bundled 33-bus feeder.
pub fn ieee33() -> NetworkModel {
    parse_grid(ieee33_grid_text()).expect("bundled fixture parses")
}

/// Parses the bundled switching plan against the 33-bus fixture.
pub fn fig3_plan() -> SwitchPlan {
    parse_plan(fig3_plan_text(), 5).expect("bundled plan parses")
}
