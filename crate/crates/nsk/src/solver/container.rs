//! Binary trajectory container.
//!
//! Layout (all multi-byte values little-endian):
//!
//! ```text
//! magic     8 bytes  "NSK1DTRJ"
//! version   u32      currently 1
//! system    u8       0 = relaxed, 1 = capillary
//! bc        u8       0 = periodic, 1 = wall
//! pad       2 bytes
//! n_cells   u64
//! length    f64
//! mu lambda kappa alpha beta cfl t_end   7 x f64
//! model     h_coeff f64, h_gamma f64, q_kind u8 (0 zero / 1 poly), pad 7,
//!           [poly: n_coeffs u64, coeffs n x f64, continue_at f64]
//! floor_events u64
//! n_steps   u64
//! steps     n_steps x 6 f64  (t, dt, mass, energy, dissipation_rate, dc_dt_norm)
//! n_frames  u64
//! frames    each: t f64, dc_dt_norm f64, rho[n], mom[n], c[n]  (f64 arrays)
//! ```
//!
//! The header carries the physics so `energy-audit` can recompute every
//! functional from the file alone.

use super::{SimParams, Snapshot, StepRecord, SystemKind, Trajectory};
use crate::grid::{BcMode, Field, Grid1D, SimState};
use crate::thermo::{LipschitzPart, MonotonePart, PressureModel};
use std::io::{self, Read, Write};

const MAGIC: &[u8; 8] = b"NSK1DTRJ";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a trajectory container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u32),
    #[error("malformed container: {0}")]
    Malformed(String),
}

pub fn write_trajectory(w: &mut impl Write, traj: &Trajectory) -> Result<(), ContainerError> {
    let p = &traj.params;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[
        match traj.system {
            SystemKind::Relaxed => 0u8,
            SystemKind::Nsk => 1u8,
        },
        match p.grid.bc {
            BcMode::Periodic => 0u8,
            BcMode::Wall => 1u8,
        },
        0,
        0,
    ])?;
    w.write_all(&(p.grid.n_cells as u64).to_le_bytes())?;
    for v in [p.grid.length, p.mu, p.lambda, p.kappa, p.alpha, p.beta, p.cfl, p.t_end] {
        w.write_all(&v.to_le_bytes())?;
    }
    write_model(w, &p.model)?;
    w.write_all(&traj.floor_events.to_le_bytes())?;

    w.write_all(&(traj.steps.len() as u64).to_le_bytes())?;
    for s in &traj.steps {
        for v in [s.t, s.dt, s.mass, s.energy, s.dissipation_rate, s.dc_dt_norm] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.write_all(&(traj.snapshots.len() as u64).to_le_bytes())?;
    for snap in &traj.snapshots {
        w.write_all(&snap.state.time.to_le_bytes())?;
        w.write_all(&snap.dc_dt_norm.to_le_bytes())?;
        for field in [&snap.state.rho, &snap.state.mom, &snap.state.c] {
            for v in &field.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn write_model(w: &mut impl Write, model: &PressureModel) -> Result<(), ContainerError> {
    let h = model.monotone_part();
    w.write_all(&h.coeff.to_le_bytes())?;
    w.write_all(&h.gamma.to_le_bytes())?;
    match model.lipschitz_part() {
        LipschitzPart::Zero => {
            w.write_all(&[0u8; 8])?;
        }
        LipschitzPart::Polynomial { coeffs, continue_at } => {
            w.write_all(&[1u8, 0, 0, 0, 0, 0, 0, 0])?;
            w.write_all(&(coeffs.len() as u64).to_le_bytes())?;
            for c in coeffs {
                w.write_all(&c.to_le_bytes())?;
            }
            w.write_all(&continue_at.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_trajectory(r: &mut impl Read) -> Result<Trajectory, ContainerError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(ContainerError::BadVersion(version));
    }
    let mut tags = [0u8; 4];
    r.read_exact(&mut tags)?;
    let system = match tags[0] {
        0 => SystemKind::Relaxed,
        1 => SystemKind::Nsk,
        t => return Err(ContainerError::Malformed(format!("unknown system tag {t}"))),
    };
    let bc = match tags[1] {
        0 => BcMode::Periodic,
        1 => BcMode::Wall,
        t => return Err(ContainerError::Malformed(format!("unknown bc tag {t}"))),
    };
    let n_cells = read_u64(r)? as usize;
    if n_cells == 0 || n_cells > 1 << 28 {
        return Err(ContainerError::Malformed(format!("implausible cell count {n_cells}")));
    }
    let length = read_f64(r)?;
    let mu = read_f64(r)?;
    let lambda = read_f64(r)?;
    let kappa = read_f64(r)?;
    let alpha = read_f64(r)?;
    let beta = read_f64(r)?;
    let cfl = read_f64(r)?;
    let t_end = read_f64(r)?;
    let model = read_model(r)?;
    let floor_events = read_u64(r)?;

    let grid = Grid1D::new(length, n_cells, bc)
        .map_err(|e| ContainerError::Malformed(e.to_string()))?;
    let params = SimParams {
        mu,
        lambda,
        kappa,
        alpha,
        beta,
        cfl,
        t_end,
        model,
        grid,
        snapshot_every: 1,
        max_dt: None,
        c_disp: 0.25,
    };

    let n_steps = read_u64(r)? as usize;
    let mut steps = Vec::with_capacity(n_steps.min(1 << 24));
    for _ in 0..n_steps {
        steps.push(StepRecord {
            t: read_f64(r)?,
            dt: read_f64(r)?,
            mass: read_f64(r)?,
            energy: read_f64(r)?,
            dissipation_rate: read_f64(r)?,
            dc_dt_norm: read_f64(r)?,
        });
    }
    let n_frames = read_u64(r)? as usize;
    let mut snapshots = Vec::with_capacity(n_frames.min(1 << 20));
    for _ in 0..n_frames {
        let time = read_f64(r)?;
        let dc_dt_norm = read_f64(r)?;
        let rho = read_field(r, grid)?;
        let mom = read_field(r, grid)?;
        let c = read_field(r, grid)?;
        snapshots.push(Snapshot {
            state: SimState::new(rho, mom, c, time),
            dc_dt_norm,
        });
    }
    if snapshots.is_empty() {
        return Err(ContainerError::Malformed("container holds no frames".into()));
    }
    Ok(Trajectory {
        params,
        system,
        snapshots,
        steps,
        floor_events,
    })
}

fn read_model(r: &mut impl Read) -> Result<PressureModel, ContainerError> {
    let coeff = read_f64(r)?;
    let gamma = read_f64(r)?;
    let mut kind = [0u8; 8];
    r.read_exact(&mut kind)?;
    let q = match kind[0] {
        0 => LipschitzPart::Zero,
        1 => {
            let n = read_u64(r)? as usize;
            if n > 64 {
                return Err(ContainerError::Malformed(format!("implausible q degree {n}")));
            }
            let mut coeffs = Vec::with_capacity(n);
            for _ in 0..n {
                coeffs.push(read_f64(r)?);
            }
            let continue_at = read_f64(r)?;
            LipschitzPart::Polynomial { coeffs, continue_at }
        }
        t => return Err(ContainerError::Malformed(format!("unknown q tag {t}"))),
    };
    PressureModel::new(MonotonePart { coeff, gamma }, q)
        .map_err(|e| ContainerError::Malformed(e.to_string()))
}

fn read_field(r: &mut impl Read, grid: Grid1D) -> Result<Field, ContainerError> {
    let mut values = vec![0.0; grid.n_cells];
    for v in &mut values {
        *v = read_f64(r)?;
    }
    Ok(Field { grid, values })
}

fn read_u32(r: &mut impl Read) -> Result<u32, ContainerError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, ContainerError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, ContainerError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
