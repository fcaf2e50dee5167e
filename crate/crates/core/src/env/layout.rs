use crate::error::{Error, Result};

/// Geometry of the rectangular street grid.
///
/// Street centerlines sit at integer multiples of the block sizes: vertical
/// streets at `x = c * block_width`, horizontal streets at `y = r * block_height`,
/// with `r` in `[-rows/2, rows/2]` and `c` in `[-cols/2, cols/2]` (integer halves).
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub rows: u32,
    pub cols: u32,
    pub block_width: f64,
    pub block_height: f64,
    pub street_width: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridLayout {
    /// Layout with area limits at the outer edges of the outermost streets.
    pub fn new(
        rows: u32,
        cols: u32,
        block_width: f64,
        block_height: f64,
        street_width: f64,
    ) -> Result<Self> {
        let half_w = (cols / 2) as f64 * block_width + street_width / 2.0;
        let half_h = (rows / 2) as f64 * block_height + street_width / 2.0;
        let layout = GridLayout {
            rows,
            cols,
            block_width,
            block_height,
            street_width,
            x_min: -half_w,
            x_max: half_w,
            y_min: -half_h,
            y_max: half_h,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 1 || self.cols < 1 {
            return Err(Error::InvalidLayout("rows and cols must be >= 1".into()));
        }
        let finite = [
            self.block_width,
            self.block_height,
            self.street_width,
            self.x_min,
            self.x_max,
            self.y_min,
            self.y_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidLayout("non-finite layout value".into()));
        }
        if self.street_width <= 0.0 {
            return Err(Error::InvalidLayout("street_width must be > 0".into()));
        }
        if self.block_width < self.street_width || self.block_height < self.street_width {
            return Err(Error::InvalidLayout(
                "block sizes must be at least the street width".into(),
            ));
        }
        let reach_x = self.max_col() as f64 * self.block_width;
        let reach_y = self.max_row() as f64 * self.block_height;
        if self.x_min > -reach_x
            || self.x_max < reach_x
            || self.y_min > -reach_y
            || self.y_max < reach_y
        {
            return Err(Error::InvalidLayout(
                "area limits must enclose every intersection".into(),
            ));
        }
        Ok(())
    }

    pub fn max_row(&self) -> i64 {
        (self.rows / 2) as i64
    }

    pub fn max_col(&self) -> i64 {
        (self.cols / 2) as i64
    }

    pub fn row_range(&self) -> std::ops::RangeInclusive<i64> {
        -self.max_row()..=self.max_row()
    }

    pub fn col_range(&self) -> std::ops::RangeInclusive<i64> {
        -self.max_col()..=self.max_col()
    }

    pub fn contains_index(&self, r: i64, c: i64) -> bool {
        self.row_range().contains(&r) && self.col_range().contains(&c)
    }

    pub fn in_area(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Clamps `x` to `[lo, hi]`.
pub fn saturate(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::invalid(format!("saturate: lo {lo} > hi {hi}")));
    }
    Ok(sat(x, lo, hi))
}

// Unchecked variant for hot loops; callers guarantee lo <= hi.
#[inline]
pub(crate) fn sat(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        lo
    } else if x >= hi {
        hi
    } else {
        x
    }
}

/// Coordinates of intersection `(r, c)`: `(c * block_width, r * block_height)`.
pub fn intersection_position(layout: &GridLayout, r: i64, c: i64) -> Result<(f64, f64)> {
    if !layout.contains_index(r, c) {
        return Err(Error::invalid(format!(
            "intersection ({r}, {c}) outside rows ±{} / cols ±{}",
            layout.max_row(),
            layout.max_col()
        )));
    }
    Ok((
        c as f64 * layout.block_width,
        r as f64 * layout.block_height,
    ))
}

/// True if the point lies within `l/2 - R` of some street centerline.
pub fn is_legal_position(layout: &GridLayout, safe_radius: f64, pos: (f64, f64)) -> bool {
    corridor_slack(layout, safe_radius, pos) >= 0.0
}

/// Largest margin by which `pos` satisfies any corridor bound; negative when illegal.
pub(crate) fn corridor_slack(layout: &GridLayout, safe_radius: f64, (x, y): (f64, f64)) -> f64 {
    let half = layout.street_width / 2.0 - safe_radius;
    let mut best = f64::NEG_INFINITY;
    for c in layout.col_range() {
        best = best.max(half - (x - c as f64 * layout.block_width).abs());
    }
    for r in layout.row_range() {
        best = best.max(half - (y - r as f64 * layout.block_height).abs());
    }
    best
}

/// Nearest point to `pos` that lies at least `margin` inside a corridor and
/// inside the area limits.
///
/// Candidates are the vertical streets in ascending `c`, then the horizontal
/// streets in ascending `r`; the first candidate at minimal distance wins.
pub fn project_to_corridor(
    layout: &GridLayout,
    safe_radius: f64,
    margin: f64,
    pos: (f64, f64),
) -> Result<(f64, f64)> {
    let half = layout.street_width / 2.0 - safe_radius - margin;
    if half.is_nan() || half < 0.0 {
        return Err(Error::InvalidLayout(format!(
            "no corridor: street_width/2 - safe_radius - margin = {half}"
        )));
    }
    let (x, y) = pos;
    // Distance outside the area along each axis.
    let out_x = (layout.x_min - x).max(x - layout.x_max).max(0.0);
    let out_y = (layout.y_min - y).max(y - layout.y_max).max(0.0);
    let ax = sat(x, layout.x_min, layout.x_max);
    let ay = sat(y, layout.y_min, layout.y_max);

    let mut best: Option<(f64, (f64, f64))> = None;
    let mut consider = |dist2: f64, point: (f64, f64)| {
        if best.map_or(true, |(d, _)| dist2 < d) {
            best = Some((dist2, point));
        }
    };
    for c in layout.col_range() {
        let center = c as f64 * layout.block_width;
        let (dx, px) = pull_into_band(x, center, half);
        let px = sat(px, layout.x_min, layout.x_max);
        let dx = dx.max((px - x).abs());
        consider(dx * dx + out_y * out_y, (px, ay));
    }
    for r in layout.row_range() {
        let center = r as f64 * layout.block_height;
        let (dy, py) = pull_into_band(y, center, half);
        let py = sat(py, layout.y_min, layout.y_max);
        let dy = dy.max((py - y).abs());
        consider(out_x * out_x + dy * dy, (ax, py));
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::InvalidLayout("layout has no streets".into()))
}

// Distance from `v` to the band `[center - half, center + half]` and the nearest
// point in it. The distance is computed from `|v - center|` so mirror-image
// positions tie exactly.
fn pull_into_band(v: f64, center: f64, half: f64) -> (f64, f64) {
    let off = v - center;
    let excess = off.abs() - half;
    if excess <= 0.0 {
        (0.0, v)
    } else if off > 0.0 {
        (excess, center + half)
    } else {
        (excess, center - half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_layout() -> GridLayout {
        GridLayout::new(2, 2, 1.0, 1.0, 0.2).unwrap()
    }

    #[test]
    fn saturate_examples() {
        assert_eq!(saturate(5.0, -1.0, 1.0).unwrap(), 1.0);
        assert_eq!(saturate(-3.0, -1.0, 1.0).unwrap(), -1.0);
        assert_eq!(saturate(0.5, -1.0, 1.0).unwrap(), 0.5);
        assert!(matches!(
            saturate(0.0, 1.0, -1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn intersection_positions() {
        let layout = GridLayout::new(3, 3, 1.0, 2.0, 0.2).unwrap();
        assert_eq!(intersection_position(&layout, 0, 0).unwrap(), (0.0, 0.0));
        assert_eq!(intersection_position(&layout, 1, -1).unwrap(), (-1.0, 2.0));
        let wide = GridLayout::new(1, 5, 0.5, 0.5, 0.2).unwrap();
        assert_eq!(intersection_position(&wide, 0, 2).unwrap(), (1.0, 0.0));
        assert!(intersection_position(&layout, 2, 0).is_err());
    }

    #[test]
    fn legality_examples() {
        let layout = unit_layout();
        assert!(is_legal_position(&layout, 0.02, (0.05, 0.5)));
        assert!(!is_legal_position(&layout, 0.02, (0.09, 0.5)));
        assert!(is_legal_position(&layout, 0.02, (0.0, 0.0)));
    }

    #[test]
    fn default_area_limits() {
        let layout = unit_layout();
        assert!((layout.x_min + 1.1).abs() < 1e-15);
        assert!((layout.y_max - 1.1).abs() < 1e-15);
    }

    #[test]
    fn layout_validation() {
        assert!(GridLayout::new(0, 2, 1.0, 1.0, 0.2).is_err());
        assert!(GridLayout::new(2, 2, 0.1, 1.0, 0.2).is_err());
        assert!(GridLayout::new(2, 2, 1.0, 1.0, 0.0).is_err());
        let mut layout = unit_layout();
        layout.x_max = 0.5;
        assert!(layout.validate().is_err());
    }

    #[test]
    fn projection_keeps_legal_points() {
        let layout = unit_layout();
        assert_eq!(
            project_to_corridor(&layout, 0.02, 0.005, (0.02, 0.5)).unwrap(),
            (0.02, 0.5)
        );
    }

    #[test]
    fn projection_rejects_too_narrow_streets() {
        let layout = unit_layout();
        assert!(matches!(
            project_to_corridor(&layout, 0.09, 0.02, (0.5, 0.5)),
            Err(Error::InvalidLayout(_))
        ));
    }
}
