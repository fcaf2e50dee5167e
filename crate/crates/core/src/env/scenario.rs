use std::collections::HashSet;

use super::layout::{intersection_position, GridLayout};
use crate::error::{Error, Result};

/// Source and destination intersections of one vehicle, as (row, col) indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub source_row: i64,
    pub source_col: i64,
    pub dest_row: i64,
    pub dest_col: i64,
}

impl Route {
    pub fn new(source_row: i64, source_col: i64, dest_row: i64, dest_col: i64) -> Self {
        Route {
            source_row,
            source_col,
            dest_row,
            dest_col,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layout: GridLayout,
    pub vehicles: Vec<Route>,
}

impl Scenario {
    pub fn new(layout: GridLayout, vehicles: Vec<Route>) -> Result<Self> {
        let scenario = Scenario { layout, vehicles };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        let mut sources = HashSet::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            if !self.layout.contains_index(v.source_row, v.source_col)
                || !self.layout.contains_index(v.dest_row, v.dest_col)
            {
                return Err(Error::invalid(format!(
                    "vehicle {i}: intersection index out of range"
                )));
            }
            if !sources.insert((v.source_row, v.source_col)) {
                return Err(Error::invalid(format!(
                    "vehicle {i}: source ({}, {}) already taken",
                    v.source_row, v.source_col
                )));
            }
        }
        Ok(())
    }

    pub fn n_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn source(&self, i: usize) -> (f64, f64) {
        let v = &self.vehicles[i];
        intersection_position(&self.layout, v.source_row, v.source_col).expect("validated scenario")
    }

    pub fn destination(&self, i: usize) -> (f64, f64) {
        let v = &self.vehicles[i];
        intersection_position(&self.layout, v.dest_row, v.dest_col).expect("validated scenario")
    }

    /// Length of the shortest street path from source to destination.
    pub fn manhattan_distance(&self, i: usize) -> f64 {
        let (sx, sy) = self.source(i);
        let (dx, dy) = self.destination(i);
        (sx - dx).abs() + (sy - dy).abs()
    }
}
