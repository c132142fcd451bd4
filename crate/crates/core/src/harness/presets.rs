//! Built-in synthetic environments.

use serde::{Deserialize, Serialize};

use crate::environment::{AccessPoint, Environment, FloorPlan, Position, Wall};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 14 m x 14 m open room, 1 m grid (15 x 15 points), one AP per corner.
    Open15,
    /// 40 m x 30 m floor around a central courtyard, 2 m grid masked down to
    /// 219 points, five APs and interior walls.
    Corridor219,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Open15 => "open15",
            Preset::Corridor219 => "corridor219",
        }
    }

    pub fn default_spacing(&self) -> f64 {
        match self {
            Preset::Open15 => 1.0,
            Preset::Corridor219 => 2.0,
        }
    }

    pub fn environment(&self) -> Result<Environment> {
        match self {
            Preset::Open15 => open15(),
            Preset::Corridor219 => corridor219(),
        }
    }
}

fn ap(id: usize, x: f64, y: f64) -> AccessPoint {
    AccessPoint {
        id,
        position: Position::new(x, y),
        tx_dbm: -30.0,
    }
}

fn open15() -> Result<Environment> {
    let plan = FloorPlan::new(14.0, 14.0, vec![])?;
    let aps = vec![ap(1, 0.0, 0.0), ap(2, 14.0, 0.0), ap(3, 0.0, 14.0), ap(4, 14.0, 14.0)];
    Environment::new(plan, aps, None)
}

fn wall(x1: f64, y1: f64, x2: f64, y2: f64, atten_db: f64, dissociating: bool) -> Wall {
    Wall {
        x1,
        y1,
        x2,
        y2,
        atten_db,
        dissociating,
    }
}

/// Grid cell `(row, col)` of the 16 x 21 lattice is walkable unless it lies in
/// the courtyard or one of the two closed-off corners.
fn corridor_mask() -> Vec<Vec<bool>> {
    (0..16)
        .map(|row| {
            (0..21)
                .map(|col| {
                    let courtyard = (5..=15).contains(&col) && (4..=11).contains(&row);
                    let storage = col >= 16 && row >= 13;
                    let stairwell = col <= 1 && row <= 6;
                    !(courtyard || storage || stairwell)
                })
                .collect()
        })
        .collect()
}

fn corridor219() -> Result<Environment> {
    let walls = vec![
        // courtyard facade (the courtyard interior holds no grid points)
        wall(9.0, 7.0, 31.0, 7.0, 8.0, true),
        wall(9.0, 23.0, 31.0, 23.0, 8.0, true),
        wall(9.0, 7.0, 9.0, 23.0, 8.0, true),
        wall(31.0, 7.0, 31.0, 23.0, 8.0, true),
        // office partitions
        wall(5.0, 13.0, 5.0, 30.0, 4.0, false),
        wall(35.0, 0.0, 35.0, 17.0, 4.0, false),
        wall(15.0, 0.0, 15.0, 5.0, 3.0, false),
        wall(25.0, 25.0, 25.0, 30.0, 3.0, false),
    ];
    let plan = FloorPlan::new(40.0, 30.0, walls)?;
    let aps = vec![
        ap(1, 4.0, 2.0),
        ap(2, 38.0, 3.0),
        ap(3, 20.0, 4.0),
        ap(4, 2.0, 28.0),
        ap(5, 28.0, 27.0),
    ];
    Environment::new(plan, aps, Some(corridor_mask()))
}
