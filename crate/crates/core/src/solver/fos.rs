use super::{Slice, SolverError};

/// Driving sums below this fraction of the total weight are rounding noise
/// (e.g. a circle centred over flat ground) and count as no driving force.
const DRIVE_EPS: f64 = 1e-12;

fn driving(slices: &[Slice]) -> Result<f64, SolverError> {
    let drive: f64 = slices.iter().map(|s| s.weight * s.base_angle.sin()).sum();
    let total: f64 = slices.iter().map(|s| s.weight).sum();
    if drive > DRIVE_EPS * total && drive.is_finite() {
        Ok(drive)
    } else {
        Err(SolverError::NoDrivingForce)
    }
}

/// Slices whose base carries a negative effective normal force
/// `W cos α − u l`.
pub fn tension_clamp_count(slices: &[Slice]) -> usize {
    slices
        .iter()
        .filter(|s| s.weight * s.base_angle.cos() - s.pore_pressure * s.base_length < 0.0)
        .count()
}

/// Ordinary method of slices:
/// `FS = Σ[c l + (W cos α − u l) tan φ] / Σ[W sin α]`, with the frictional
/// term clamped to zero where the effective normal force is negative.
pub fn fos_fellenius(slices: &[Slice]) -> Result<f64, SolverError> {
    let drive = driving(slices)?;
    let resist: f64 = slices
        .iter()
        .map(|s| {
            let normal = (s.weight * s.base_angle.cos() - s.pore_pressure * s.base_length).max(0.0);
            s.cohesion * s.base_length + normal * s.friction.tan()
        })
        .sum();
    Ok(resist / drive)
}

/// One fixed-point step of Bishop's simplified method:
/// `G(F) = Σ[(c b + (W − u b) tan φ) / m_α] / Σ[W sin α]` with
/// `m_α = cos α (1 + tan α tan φ / F)`.
pub fn bishop_step(slices: &[Slice], fos: f64) -> Result<f64, SolverError> {
    let drive = driving(slices)?;
    let mut resist = 0.0;
    for s in slices {
        let tan_phi = s.friction.tan();
        let m_alpha = s.base_angle.cos() + s.base_angle.sin() * tan_phi / fos;
        if !(m_alpha > 0.0) {
            return Err(SolverError::NonConvergence { iterations: 0 });
        }
        let effective = (s.weight - s.pore_pressure * s.width).max(0.0);
        resist += (s.cohesion * s.width + effective * tan_phi) / m_alpha;
    }
    Ok(resist / drive)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BishopOutcome {
    pub fos: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Bishop's simplified method by fixed-point iteration seeded with the
/// Fellenius value. Converged once successive iterates differ by less than
/// `tol`; the later iterate is reported.
pub fn fos_bishop(
    slices: &[Slice],
    tol: f64,
    max_iter: usize,
) -> Result<BishopOutcome, SolverError> {
    let seed = fos_fellenius(slices)?;
    let mut fos = if seed > 0.0 { seed } else { 1.0 };
    for iteration in 1..=max_iter {
        let next = bishop_step(slices, fos).map_err(|e| match e {
            SolverError::NonConvergence { .. } => SolverError::NonConvergence {
                iterations: iteration,
            },
            other => other,
        })?;
        if !(next > 0.0) || !next.is_finite() {
            return Err(SolverError::NonConvergence {
                iterations: iteration,
            });
        }
        if (next - fos).abs() < tol {
            return Ok(BishopOutcome {
                fos: next,
                iterations: iteration,
                converged: true,
            });
        }
        fos = next;
    }
    Err(SolverError::NonConvergence {
        iterations: max_iter,
    })
}
