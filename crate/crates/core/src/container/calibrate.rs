use super::{BayerPhase, CalibrationParams, Color, ContainerError, RawLensletImage};

/// One occupied cell of the calibrated canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub color: Color,
    pub value: u16,
}

/// Calibrated lenselet: a canvas of `params.canvas_width() × params.canvas_height()`
/// cells, each holding at most one sensor sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibratedLenslet {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub bayer_phase: BayerPhase,
    pub cells: Vec<Option<Cell>>,
}

impl CalibratedLenslet {
    pub fn empty(params: &CalibrationParams, bit_depth: u8, bayer_phase: BayerPhase) -> Self {
        let (width, height) = (params.canvas_width(), params.canvas_height());
        Self {
            width,
            height,
            bit_depth,
            bayer_phase,
            cells: vec![None; width * height],
        }
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn occupancy(&self) -> Vec<bool> {
        self.cells.iter().map(Option::is_some).collect()
    }
}

/// A sample that lost its destination cell to a nearer sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    /// Canvas cell `(x, y)` both samples snapped to.
    pub cell: (usize, usize),
    /// Sensor `(row, col)` of the sample that was kept.
    pub kept: (usize, usize),
    /// Sensor `(row, col)` of the sample that was dropped.
    pub dropped: (usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationReport {
    pub collisions: Vec<Collision>,
    /// Sensor `(row, col)` of samples whose snapped position is off the canvas.
    pub out_of_canvas: Vec<(usize, usize)>,
}

impl CalibrationReport {
    pub fn dropped(&self) -> usize {
        self.collisions.len() + self.out_of_canvas.len()
    }
}

/// Geometry of calibration for one sensor size. It depends only on the sensor
/// dimensions and the parameters, never on sample values, so the decoder can
/// rebuild it from the stream header and invert the calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMap {
    pub sensor_width: usize,
    pub sensor_height: usize,
    pub canvas_width: usize,
    pub canvas_height: usize,
    /// Per canvas cell, the row-major sensor index that occupies it.
    pub source: Vec<Option<usize>>,
    /// Per sensor sample, the canvas cell it occupies (collision winners only).
    pub dest: Vec<Option<usize>>,
    pub report: CalibrationReport,
}

impl CalibrationMap {
    pub fn new(
        sensor_width: usize,
        sensor_height: usize,
        params: &CalibrationParams,
    ) -> Result<Self, ContainerError> {
        params.validate()?;
        let (cw, ch) = (params.canvas_width(), params.canvas_height());
        let mut source: Vec<Option<usize>> = vec![None; cw * ch];
        let mut best = vec![f64::INFINITY; cw * ch];
        let mut dest: Vec<Option<usize>> = vec![None; sensor_width * sensor_height];
        let mut report = CalibrationReport::default();

        for row in 0..sensor_height {
            for col in 0..sensor_width {
                let idx = row * sensor_width + col;
                let (fx, fy) = params.map_point(col as f64, row as f64);
                let (sx, sy) = (fx.round(), fy.round());
                let in_range = sx >= 0.0 && sy >= 0.0 && sx < cw as f64 && sy < ch as f64;
                if !in_range || params.cell_to_sai(sx as usize, sy as usize).is_none() {
                    report.out_of_canvas.push((row, col));
                    continue;
                }
                let cell = sy as usize * cw + sx as usize;
                let dist = ((fx - sx).powi(2) + (fy - sy).powi(2)).sqrt();
                match source[cell] {
                    None => {
                        source[cell] = Some(idx);
                        best[cell] = dist;
                        dest[idx] = Some(cell);
                    }
                    Some(prev) => {
                        let prev_rc = (prev / sensor_width, prev % sensor_width);
                        let cell_xy = (sx as usize, sy as usize);
                        if dist < best[cell] {
                            dest[prev] = None;
                            source[cell] = Some(idx);
                            best[cell] = dist;
                            dest[idx] = Some(cell);
                            report.collisions.push(Collision {
                                cell: cell_xy,
                                kept: (row, col),
                                dropped: prev_rc,
                            });
                        } else {
                            report.collisions.push(Collision {
                                cell: cell_xy,
                                kept: prev_rc,
                                dropped: (row, col),
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            sensor_width,
            sensor_height,
            canvas_width: cw,
            canvas_height: ch,
            source,
            dest,
            report,
        })
    }

    /// Color of every canvas cell, known from geometry alone.
    pub fn cell_colors(&self, bayer_phase: BayerPhase) -> Vec<Option<Color>> {
        self.source
            .iter()
            .map(|s| s.map(|i| bayer_phase.color_at(i / self.sensor_width, i % self.sensor_width)))
            .collect()
    }
}

/// Maps every sensor sample through the affine and snaps it to the nearest
/// integer cell. When two samples land on one cell the one closer to the cell
/// center before snapping wins (ties go to the earlier sample in raster order);
/// losers and off-canvas samples are listed in the report.
pub fn calibrate(
    raw: &RawLensletImage,
    params: &CalibrationParams,
) -> Result<(CalibratedLenslet, CalibrationMap), ContainerError> {
    let map = CalibrationMap::new(raw.width, raw.height, params)?;
    let mut cal = CalibratedLenslet::empty(params, raw.bit_depth, raw.bayer_phase);
    for (cell, src) in map.source.iter().enumerate() {
        if let Some(i) = *src {
            let (row, col) = (i / raw.width, i % raw.width);
            cal.cells[cell] = Some(Cell {
                color: raw.color_at(row, col),
                value: raw.samples[i],
            });
        }
    }
    Ok((cal, map))
}

/// Writes calibrated samples back to their sensor positions. Samples the
/// calibration dropped are filled with `fill`.
pub fn restore_raw(
    cal: &CalibratedLenslet,
    map: &CalibrationMap,
    fill: u16,
) -> Result<RawLensletImage, ContainerError> {
    if cal.width != map.canvas_width || cal.height != map.canvas_height {
        return Err(ContainerError::ShapeMismatch(format!(
            "canvas {}x{} does not match calibration map {}x{}",
            cal.width, cal.height, map.canvas_width, map.canvas_height
        )));
    }
    let mut samples = vec![fill; map.sensor_width * map.sensor_height];
    for (i, d) in map.dest.iter().enumerate() {
        if let Some(cell) = *d {
            if let Some(c) = cal.cells[cell] {
                samples[i] = c.value;
            }
        }
    }
    RawLensletImage::new(
        map.sensor_width,
        map.sensor_height,
        cal.bit_depth,
        cal.bayer_phase,
        samples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_raw(w: usize, h: usize) -> RawLensletImage {
        let samples = (0..w * h).map(|i| (i % 251) as u16).collect();
        RawLensletImage::new(w, h, 8, BayerPhase::Rggb, samples).unwrap()
    }

    #[test]
    fn identity_keeps_positions_and_values() {
        let params = CalibrationParams::identity(2, 2, 8, 8);
        let raw = ramp_raw(16, 16);
        let (cal, map) = calibrate(&raw, &params).unwrap();
        assert_eq!(map.report.dropped(), 0);
        for row in 0..16 {
            for col in 0..16 {
                let c = cal.cells[row * 16 + col].unwrap();
                assert_eq!(c.value, raw.get(row, col));
                assert_eq!(c.color, raw.color_at(row, col));
            }
        }
        assert_eq!(restore_raw(&cal, &map, 0).unwrap(), raw);
    }

    #[test]
    fn subpixel_translation_snaps_back() {
        let mut params = CalibrationParams::identity(2, 2, 8, 8);
        params.affine = [1.0, 0.0, 0.4, 0.0, 1.0, 0.0];
        let raw = ramp_raw(16, 16);
        let (cal, map) = calibrate(&raw, &params).unwrap();
        assert_eq!(map.report.dropped(), 0);
        for (i, d) in map.dest.iter().enumerate() {
            assert_eq!(*d, Some(i));
        }
        assert_eq!(restore_raw(&cal, &map, 0).unwrap(), raw);
    }

    #[test]
    fn non_invertible_affine_is_rejected() {
        let mut params = CalibrationParams::identity(2, 2, 8, 8);
        params.affine = [1.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let raw = ramp_raw(16, 16);
        assert!(matches!(
            calibrate(&raw, &params),
            Err(ContainerError::NonInvertibleAffine(_))
        ));
    }

    /// Independent per-sample remap: round(affine · x) with a nearest-wins rule
    /// evaluated by sorting candidates per destination.
    fn brute_force(
        raw: &RawLensletImage,
        p: &CalibrationParams,
    ) -> (Vec<Option<usize>>, usize, usize) {
        let (cw, ch) = (p.canvas_width(), p.canvas_height());
        let mut cands: Vec<Vec<(f64, usize)>> = vec![Vec::new(); cw * ch];
        let mut off = 0;
        for i in 0..raw.width * raw.height {
            let (x, y) = ((i % raw.width) as f64, (i / raw.width) as f64);
            let a = p.affine;
            let fx = a[0] * x + a[1] * y + a[2];
            let fy = a[3] * x + a[4] * y + a[5];
            let (sx, sy) = (fx.round(), fy.round());
            if sx < 0.0
                || sy < 0.0
                || sx >= cw as f64
                || sy >= ch as f64
                || p.cell_to_sai(sx as usize, sy as usize).is_none()
            {
                off += 1;
                continue;
            }
            let d = (fx - sx).hypot(fy - sy);
            cands[sy as usize * cw + sx as usize].push((d, i));
        }
        let mut collisions = 0;
        let occ = cands
            .iter_mut()
            .map(|c| {
                if c.is_empty() {
                    return None;
                }
                collisions += c.len() - 1;
                c.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                Some(c[0].1)
            })
            .collect();
        (occ, collisions, off)
    }

    #[test]
    fn rotation_matches_brute_force_remap() {
        let params = CalibrationParams::identity(1, 1, 8, 8).with_rotation(3.0);
        let raw = ramp_raw(8, 8);
        let (_, map) = calibrate(&raw, &params).unwrap();
        let (occ, collisions, off) = brute_force(&raw, &params);
        assert_eq!(map.source, occ);
        assert_eq!(map.report.collisions.len(), collisions);
        assert_eq!(map.report.out_of_canvas.len(), off);
    }

    #[test]
    fn snapping_distance_is_bounded() {
        let params = CalibrationParams::identity(3, 3, 8, 8).with_rotation(7.0);
        let raw = ramp_raw(24, 24);
        let (_, map) = calibrate(&raw, &params).unwrap();
        for (i, d) in map.dest.iter().enumerate() {
            if let Some(cell) = d {
                let (fx, fy) = params.map_point((i % 24) as f64, (i / 24) as f64);
                let (cx, cy) = (
                    (cell % map.canvas_width) as f64,
                    (cell / map.canvas_width) as f64,
                );
                assert!((fx - cx).hypot(fy - cy) <= 0.5 * 2f64.sqrt() + 1e-12);
            }
        }
        let kept = map.dest.iter().filter(|d| d.is_some()).count();
        assert_eq!(kept + map.report.dropped(), 24 * 24);
    }
}
