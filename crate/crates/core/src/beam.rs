//! Directional gain of codebook beams formed by a uniform antenna array.
//!
//! A beam steered to a boresight direction illuminates an observation angle
//! with the power array factor of the uniform array, expressed here through
//! the Fejér kernel. Misalignment is measured in sin-space (the natural
//! coordinate of a phased array), so the pattern of a steered beam is the
//! broadside pattern translated along `sin(angle)`.
//!
//! Two testbed codebooks are built in:
//!
//! * `interdigital` — 63 beams on a 9 × 7 azimuth/elevation grid formed by an
//!   8 × 8 rectangular array (±45° azimuth in 11.25° steps, ±35° elevation).
//! * `ni` — 25 beams sweeping the azimuth plane from −60° to +60° in 5° steps,
//!   formed by a 4-element linear array.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeamError {
    #[error("unknown beam id {0}")]
    UnknownBeam(u32),
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("codebook table line {line}: {msg}")]
    Table { line: usize, msg: String },
}

// ── array geometry ──────────────────────────────────────────────────────────

/// Uniform rectangular array: `elements_x` columns steer azimuth,
/// `elements_y` rows steer elevation. `elements_y = 1` degenerates to a
/// linear array. Spacing is in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub elements_x: usize,
    pub elements_y: usize,
    pub spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(elements_x: usize, elements_y: usize, spacing_wavelengths: f64) -> Self {
        Self {
            elements_x,
            elements_y,
            spacing_wavelengths,
        }
    }

    /// Total element count M.
    pub fn total_elements(&self) -> usize {
        self.elements_x * self.elements_y
    }
}

// ── beams and codebooks ─────────────────────────────────────────────────────

/// One pre-formed beam: boresight direction plus its baseband amplitude
/// weight. The steering phase weights are implied by the boresight angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub beam_id: u32,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub baseband_weight: f64,
}

/// An indexed set of beams a transceiver can select among, one active at a
/// time. Beam ids are unique and contiguous from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub name: String,
    pub geometry: ArrayGeometry,
    pub beams: Vec<Beam>,
    pub azimuth_step_deg: f64,
    pub elevation_step_deg: f64,
}

/// Fejér kernel `F_m(x) = (1/m) (sin(m x / 2) / sin(x / 2))^2`.
///
/// This equals the power array factor of `m` uniformly excited elements at
/// phase offset `x` per element. The removable singularity at `x ≡ 0 (mod 2π)`
/// evaluates to `m`; the result lies in `[0, m]`, is even in `x` and
/// 2π-periodic.
pub fn fejer_kernel(m: usize, delta_rad: f64) -> f64 {
    debug_assert!(m >= 1);
    let mf = m as f64;
    let half_sin = (delta_rad / 2.0).sin();
    // Within ~2e-12 of a multiple of 2π the kernel is flat at its peak value.
    if half_sin.abs() < 1e-12 {
        return mf;
    }
    let ratio = (mf * delta_rad / 2.0).sin() / half_sin;
    (ratio * ratio / mf).min(mf)
}

impl Codebook {
    /// Check the structural invariants: contiguous ids from 1, unique
    /// boresights, positive weights, sane geometry and steps.
    pub fn validate(&self) -> Result<(), BeamError> {
        let g = &self.geometry;
        if g.elements_x < 1 || g.elements_y < 1 {
            return Err(BeamError::InvalidCodebook(
                "array must have at least one element per axis".into(),
            ));
        }
        if !(g.spacing_wavelengths > 0.0) {
            return Err(BeamError::InvalidCodebook("element spacing must be positive".into()));
        }
        if !(self.azimuth_step_deg > 0.0) || !(self.elevation_step_deg > 0.0) {
            return Err(BeamError::InvalidCodebook("angular steps must be positive".into()));
        }
        if self.beams.is_empty() {
            return Err(BeamError::InvalidCodebook("codebook has no beams".into()));
        }
        for (i, b) in self.beams.iter().enumerate() {
            if b.beam_id != (i + 1) as u32 {
                return Err(BeamError::InvalidCodebook(format!(
                    "beam ids must be contiguous from 1 (index {i} has id {})",
                    b.beam_id
                )));
            }
            if !(b.baseband_weight > 0.0) {
                return Err(BeamError::InvalidCodebook(format!(
                    "beam {} has non-positive baseband weight",
                    b.beam_id
                )));
            }
        }
        for (i, a) in self.beams.iter().enumerate() {
            for b in &self.beams[i + 1..] {
                if a.azimuth_deg == b.azimuth_deg && a.elevation_deg == b.elevation_deg {
                    return Err(BeamError::InvalidCodebook(format!(
                        "beams {} and {} share boresight ({}, {})",
                        a.beam_id, b.beam_id, a.azimuth_deg, a.elevation_deg
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn beam(&self, beam_id: u32) -> Result<&Beam, BeamError> {
        self.beams
            .get(beam_id.wrapping_sub(1) as usize)
            .filter(|b| b.beam_id == beam_id)
            .ok_or(BeamError::UnknownBeam(beam_id))
    }

    /// Linear power gain of `beam_id` observed from an absolute direction.
    ///
    /// Separable product of per-axis Fejér kernels with sin-space
    /// misalignment `ψ = 2π d (sin(obs) − sin(boresight))`; the maximum is
    /// exactly `elements_x · elements_y` at the boresight.
    pub fn beam_gain(
        &self,
        beam_id: u32,
        obs_azimuth_deg: f64,
        obs_elevation_deg: f64,
    ) -> Result<f64, BeamError> {
        let beam = self.beam(beam_id)?;
        let psi_az = self.sin_space_offset(obs_azimuth_deg, beam.azimuth_deg);
        let psi_el = self.sin_space_offset(obs_elevation_deg, beam.elevation_deg);
        Ok(fejer_kernel(self.geometry.elements_x, psi_az)
            * fejer_kernel(self.geometry.elements_y, psi_el))
    }

    /// Linear power gain at a signed angular offset from the beam's own
    /// boresight, evaluated in the beam-local frame: `ψ = 2π d sin(offset)`.
    ///
    /// Every beam shares the same local profile (the broadside pattern), so
    /// gain at `+offset` and `−offset` is identical. This is the quantity the
    /// measurement map sweeps over: the receiver is re-aimed at each spot, so
    /// only the offset from the boresight line matters.
    pub fn beam_gain_local(
        &self,
        beam_id: u32,
        offset_azimuth_deg: f64,
        offset_elevation_deg: f64,
    ) -> Result<f64, BeamError> {
        self.beam(beam_id)?; // existence check
        let psi_az = self.sin_space_offset(offset_azimuth_deg, 0.0);
        let psi_el = self.sin_space_offset(offset_elevation_deg, 0.0);
        Ok(fejer_kernel(self.geometry.elements_x, psi_az)
            * fejer_kernel(self.geometry.elements_y, psi_el))
    }

    fn sin_space_offset(&self, obs_deg: f64, boresight_deg: f64) -> f64 {
        2.0 * PI
            * self.geometry.spacing_wavelengths
            * (obs_deg.to_radians().sin() - boresight_deg.to_radians().sin())
    }

    // ── text-table import/export (baseband-weight overrides) ───────────────

    /// Render the codebook as a comma-separated table, one row per beam.
    pub fn table_string(&self) -> String {
        let mut out = String::from("beam_id,azimuth_deg,elevation_deg,baseband_weight\n");
        for b in &self.beams {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                b.beam_id, b.azimuth_deg, b.elevation_deg, b.baseband_weight
            );
        }
        out
    }

    /// Apply per-beam baseband-weight overrides from a table in the
    /// [`table_string`](Self::table_string) format. Rows must reference
    /// existing beam ids; boresight columns must match the codebook.
    pub fn with_weights_from_table(&self, table: &str) -> Result<Codebook, BeamError> {
        let mut book = self.clone();
        for (idx, raw) in table.lines().enumerate() {
            let line = idx + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            if idx == 0 && text.starts_with("beam_id") {
                continue; // header
            }
            let fields: Vec<&str> = text.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(BeamError::Table {
                    line,
                    msg: format!("expected 4 columns, found {}", fields.len()),
                });
            }
            let beam_id: u32 = fields[0].parse().map_err(|_| BeamError::Table {
                line,
                msg: format!("bad beam id {:?}", fields[0]),
            })?;
            let parse_f = |s: &str, what: &str| -> Result<f64, BeamError> {
                s.parse().map_err(|_| BeamError::Table {
                    line,
                    msg: format!("bad {what} {s:?}"),
                })
            };
            let az = parse_f(fields[1], "azimuth")?;
            let el = parse_f(fields[2], "elevation")?;
            let w = parse_f(fields[3], "baseband weight")?;
            let pos = book
                .beams
                .iter()
                .position(|b| b.beam_id == beam_id)
                .ok_or(BeamError::UnknownBeam(beam_id))?;
            let beam = &mut book.beams[pos];
            if (beam.azimuth_deg - az).abs() > 1e-6 || (beam.elevation_deg - el).abs() > 1e-6 {
                return Err(BeamError::Table {
                    line,
                    msg: format!(
                        "boresight ({az}, {el}) does not match beam {beam_id} at ({}, {})",
                        beam.azimuth_deg, beam.elevation_deg
                    ),
                });
            }
            if !(w > 0.0) {
                return Err(BeamError::Table {
                    line,
                    msg: format!("baseband weight must be positive, got {w}"),
                });
            }
            beam.baseband_weight = w;
        }
        book.validate()?;
        Ok(book)
    }
}

// ── built-in testbed codebooks ──────────────────────────────────────────────

/// The 27 GHz head unit codebook: 63 beams on a 9 (azimuth) × 7 (elevation)
/// grid over ±45° / ±35°, id = row · 9 + col + 1 in row-major elevation/
/// azimuth order. Beam 32 sits at (0°, 0°); ids 28–36 sweep azimuth at
/// elevation 0. Formed by an 8 × 8 half-wavelength array.
pub fn make_interdigital_codebook() -> Codebook {
    const AZ_STEP: f64 = 11.25;
    let el_step = 35.0 / 3.0; // 7 rows over ±35°, ≈ 11.67°
    let mut beams = Vec::with_capacity(63);
    for row in 0..7i64 {
        for col in 0..9i64 {
            beams.push(Beam {
                beam_id: (row * 9 + col + 1) as u32,
                azimuth_deg: (col - 4) as f64 * AZ_STEP,
                elevation_deg: (row - 3) as f64 * el_step,
                baseband_weight: 1.0,
            });
        }
    }
    let book = Codebook {
        name: "interdigital".into(),
        geometry: ArrayGeometry::new(8, 8, 0.5),
        beams,
        azimuth_step_deg: AZ_STEP,
        elevation_step_deg: el_step,
    };
    debug_assert!(book.validate().is_ok());
    book
}

/// The 71 GHz transceiver codebook: 25 beams covering the azimuth plane from
/// −60° to +60° in 5° steps, all at elevation 0, formed by a 4-element
/// half-wavelength linear array (wide overlapping beams to match the 5°
/// steering granularity).
pub fn make_ni_codebook() -> Codebook {
    let beams = (1..=25i64)
        .map(|id| Beam {
            beam_id: id as u32,
            azimuth_deg: (id - 13) as f64 * 5.0,
            elevation_deg: 0.0,
            baseband_weight: 1.0,
        })
        .collect();
    let book = Codebook {
        name: "ni".into(),
        geometry: ArrayGeometry::new(4, 1, 0.5),
        beams,
        azimuth_step_deg: 5.0,
        // Single elevation row; nominal step kept positive for the invariant.
        elevation_step_deg: 5.0,
    };
    debug_assert!(book.validate().is_ok());
    book
}

/// Look up a built-in codebook by name.
pub fn builtin_codebook(name: &str) -> Result<Codebook, BeamError> {
    match name {
        "interdigital" => Ok(make_interdigital_codebook()),
        "ni" => Ok(make_ni_codebook()),
        other => Err(BeamError::InvalidCodebook(format!(
            "no built-in codebook named {other:?} (expected \"interdigital\" or \"ni\")"
        ))),
    }
}

// ── tests ───────────────────────────────────────────────────────────────────
