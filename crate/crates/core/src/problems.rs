//! Deterministic model problems: Poisson, rotated anisotropic diffusion,
//! linear elasticity on a hexahedral beam, and heterogeneous 2D diffusion.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AmgError, Result};
use crate::scalar::Scalar;
use crate::sparse::{MultiVector, SparseMatrix};

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.iter().any(|&d| d < 2) {
        return Err(AmgError::InvalidParameter(format!(
            "grid dimensions {dims:?} must all be at least 2"
        )));
    }
    Ok(())
}

/// 7-point finite differences of `-Δu` on an `nx x ny x nz` grid with
/// Dirichlet boundaries (eliminated), `x` fastest.
pub fn gen_poisson7<T: Scalar>(nx: usize, ny: usize, nz: usize) -> Result<SparseMatrix<T>> {
    gen_rotated_anisotropy(nx, ny, nz, 0.0, 1.0, 1.0, 1.0)
}

/// `-∇·(K̂ ∇u)` with `K̂ = Q^T diag(kx, ky, kz) Q`, `Q` an in-plane rotation
/// by `theta_deg`. Second derivatives use 3-point differences and mixed
/// derivatives the 4-point central stencil, so the pattern grows from 7 to
/// up to 19 points when the cross terms are nonzero.
pub fn gen_rotated_anisotropy<T: Scalar>(
    nx: usize,
    ny: usize,
    nz: usize,
    theta_deg: f64,
    kx: f64,
    ky: f64,
    kz: f64,
) -> Result<SparseMatrix<T>> {
    check_dims(&[nx, ny, nz])?;
    if !(kx > 0.0 && ky > 0.0 && kz > 0.0) {
        return Err(AmgError::InvalidParameter(
            "anisotropy coefficients must be positive".into(),
        ));
    }
    let k = rotated_tensor(theta_deg, [kx, ky, kz]);
    // stencil offsets (dx, dy, dz) -> coefficient
    let mut stencil: Vec<([i64; 3], f64)> = vec![([0, 0, 0], 2.0 * (k[0][0] + k[1][1] + k[2][2]))];
    for d in 0..3 {
        let mut e = [0i64; 3];
        e[d] = 1;
        stencil.push((e, -k[d][d]));
        e[d] = -1;
        stencil.push((e, -k[d][d]));
    }
    for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let c = k[p][q] / 2.0;
        if c == 0.0 {
            continue;
        }
        for (sp, sq, sign) in [(1, 1, -1.0), (-1, -1, -1.0), (1, -1, 1.0), (-1, 1, 1.0)] {
            let mut e = [0i64; 3];
            e[p] = sp;
            e[q] = sq;
            stencil.push((e, sign * c));
        }
    }
    let dims = [nx as i64, ny as i64, nz as i64];
    let n = nx * ny * nz;
    let mut trip = Vec::with_capacity(n * stencil.len());
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = (x + dims[0] * (y + dims[1] * z)) as usize;
                for (off, v) in &stencil {
                    let (a, b, c) = (x + off[0], y + off[1], z + off[2]);
                    if a < 0 || b < 0 || c < 0 || a >= dims[0] || b >= dims[1] || c >= dims[2] {
                        continue;
                    }
                    let j = (a + dims[0] * (b + dims[1] * c)) as usize;
                    trip.push((i, j, T::of(*v)));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &trip)
}

/// `Q^T diag(k) Q` with `Q = [[c, -s, 0], [s, c, 0], [0, 0, 1]]`.
pub fn rotated_tensor(theta_deg: f64, k: [f64; 3]) -> [[f64; 3]; 3] {
    let (s, c) = theta_deg.to_radians().sin_cos();
    let q = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|m| q[m][i] * k[m] * q[m][j]).sum();
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// All displacements on the `x = 0` face are fixed (and eliminated).
    Clamped,
    /// No constraints: the stiffness matrix has the rigid-body modes as kernel.
    Free,
}

/// Stiffness of a trilinear hexahedron with unit edges, 2x2x2 Gauss points.
/// Unknowns are ordered node-wise `(u, v, w)`, nodes as in [`HEX_CORNERS`].
pub fn hex_element_stiffness(e: f64, nu: f64) -> [[f64; 24]; 24] {
    let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let mut d = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = lam;
        }
        d[i][i] = lam + 2.0 * mu;
        d[i + 3][i + 3] = mu;
    }
    let g = 1.0 / 3f64.sqrt();
    let gauss = [0.5 - 0.5 * g, 0.5 + 0.5 * g];
    let mut k = [[0.0; 24]; 24];
    for &px in &gauss {
        for &py in &gauss {
            for &pz in &gauss {
                // shape-function gradients on the unit cube; weight 1/8 each
                let mut grad = [[0.0; 3]; 8];
                for (a, c) in HEX_CORNERS.iter().enumerate() {
                    let f = |t: f64, ci: u8| if ci == 1 { t } else { 1.0 - t };
                    let df = |ci: u8| if ci == 1 { 1.0 } else { -1.0 };
                    grad[a] = [
                        df(c[0]) * f(py, c[1]) * f(pz, c[2]),
                        f(px, c[0]) * df(c[1]) * f(pz, c[2]),
                        f(px, c[0]) * f(py, c[1]) * df(c[2]),
                    ];
                }
                // strain-displacement matrix, Voigt order xx yy zz xy yz xz
                let mut b = [[0.0; 24]; 6];
                for (a, gr) in grad.iter().enumerate() {
                    let (u, v, w) = (3 * a, 3 * a + 1, 3 * a + 2);
                    b[0][u] = gr[0];
                    b[1][v] = gr[1];
                    b[2][w] = gr[2];
                    b[3][u] = gr[1];
                    b[3][v] = gr[0];
                    b[4][v] = gr[2];
                    b[4][w] = gr[1];
                    b[5][u] = gr[2];
                    b[5][w] = gr[0];
                }
                let mut db = [[0.0; 24]; 6];
                for r in 0..6 {
                    for col in 0..24 {
                        db[r][col] = (0..6).map(|m| d[r][m] * b[m][col]).sum();
                    }
                }
                for p in 0..24 {
                    for q in 0..24 {
                        let s: f64 = (0..6).map(|r| b[r][p] * db[r][q]).sum();
                        k[p][q] += s / 8.0;
                    }
                }
            }
        }
    }
    k
}

/// Local corner offsets of the hexahedron.
pub const HEX_CORNERS: [[u8; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Linear elasticity on a beam of `nx x ny x nz` unit hexahedra.
///
/// Returns the stiffness matrix and the coordinates of the nodes that carry
/// unknowns (one row per node, matching the node-wise unknown ordering).
pub fn gen_elasticity3d<T: Scalar>(
    nx: usize,
    ny: usize,
    nz: usize,
    e: f64,
    nu: f64,
    bc: BoundaryCondition,
) -> Result<(SparseMatrix<T>, MultiVector<T>)> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(AmgError::InvalidParameter(
            "elasticity beam needs at least one element per axis".into(),
        ));
    }
    if !(nu > 0.0 && nu < 0.5) || !(e > 0.0) {
        return Err(AmgError::InvalidParameter(format!(
            "material constants E={e}, nu={nu} out of range"
        )));
    }
    let ke = hex_element_stiffness(e, nu);
    let (px, py) = (nx + 1, ny + 1);
    let node = |x: usize, y: usize, z: usize| x + px * (y + py * z);
    let n_nodes = px * py * (nz + 1);
    // clamped: nodes on x = 0 carry no unknowns
    let mut dof_node = vec![usize::MAX; n_nodes];
    let mut coords = Vec::new();
    let mut next = 0;
    for z in 0..=nz {
        for y in 0..=ny {
            for x in 0..=nx {
                if bc == BoundaryCondition::Clamped && x == 0 {
                    continue;
                }
                dof_node[node(x, y, z)] = next;
                next += 1;
                coords.extend([T::of_usize(x), T::of_usize(y), T::of_usize(z)]);
            }
        }
    }
    let n = 3 * next;
    let mut trip = Vec::with_capacity(nx * ny * nz * 24 * 24);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let ids: Vec<usize> = HEX_CORNERS
                    .iter()
                    .map(|c| dof_node[node(x + c[0] as usize, y + c[1] as usize, z + c[2] as usize)])
                    .collect();
                for (a, &na) in ids.iter().enumerate() {
                    if na == usize::MAX {
                        continue;
                    }
                    for (b, &nb) in ids.iter().enumerate() {
                        if nb == usize::MAX {
                            continue;
                        }
                        for p in 0..3 {
                            for q in 0..3 {
                                let v = ke[3 * a + p][3 * b + q];
                                if v != 0.0 {
                                    trip.push((3 * na + p, 3 * nb + q, T::of(v)));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, &trip)?;
    Ok((a, MultiVector::from_row_major(next, 3, coords)?))
}

/// Cell-centred 5-point diffusion with log-uniform random coefficients in
/// `[1, contrast]`, harmonic face averages and Dirichlet walls.
pub fn gen_heterogeneous<T: Scalar>(
    nx: usize,
    ny: usize,
    contrast: f64,
    seed: u64,
) -> Result<SparseMatrix<T>> {
    check_dims(&[nx, ny])?;
    if !(contrast >= 1.0) {
        return Err(AmgError::InvalidParameter(format!(
            "contrast {contrast} must be at least 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lc = contrast.log10();
    let kappa: Vec<f64> = (0..nx * ny)
        .map(|_| 10f64.powf(rng.gen::<f64>() * lc))
        .collect();
    let id = |x: usize, y: usize| x + nx * y;
    let mut trip = Vec::with_capacity(5 * nx * ny);
    for y in 0..ny {
        for x in 0..nx {
            let i = id(x, y);
            let mut diag = 0.0;
            let nbrs = [
                (x > 0).then(|| id(x - 1, y)),
                (x + 1 < nx).then(|| id(x + 1, y)),
                (y > 0).then(|| id(x, y - 1)),
                (y + 1 < ny).then(|| id(x, y + 1)),
            ];
            for nb in nbrs {
                match nb {
                    Some(j) => {
                        let f = 2.0 * kappa[i] * kappa[j] / (kappa[i] + kappa[j]);
                        trip.push((i, j, T::of(-f)));
                        diag += f;
                    }
                    None => diag += kappa[i],
                }
            }
            trip.push((i, i, T::of(diag)));
        }
    }
    SparseMatrix::from_triplets(nx * ny, nx * ny, &trip)
}

/// Generator selection with its parameters, parseable from strings such as
/// `poisson7:16,16,16` or `anisotropy:32,32,32,30,10,1e-3,1e-6`.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Poisson7 {
        nx: usize,
        ny: usize,
        nz: usize,
    },
    RotatedAnisotropy {
        nx: usize,
        ny: usize,
        nz: usize,
        theta_deg: f64,
        kx: f64,
        ky: f64,
        kz: f64,
    },
    Elasticity3D {
        nx: usize,
        ny: usize,
        nz: usize,
        e: f64,
        nu: f64,
        bc: BoundaryCondition,
    },
    Heterogeneous {
        nx: usize,
        ny: usize,
        contrast: f64,
        seed: u64,
    },
}

/// Generated matrix plus node coordinates when the problem has them.
#[derive(Clone, Debug)]
pub struct Problem<T> {
    pub a: SparseMatrix<T>,
    pub coords: Option<MultiVector<T>>,
}

impl ProblemSpec {
    pub fn generate<T: Scalar>(&self) -> Result<Problem<T>> {
        Ok(match *self {
            ProblemSpec::Poisson7 { nx, ny, nz } => Problem {
                a: gen_poisson7(nx, ny, nz)?,
                coords: None,
            },
            ProblemSpec::RotatedAnisotropy {
                nx,
                ny,
                nz,
                theta_deg,
                kx,
                ky,
                kz,
            } => Problem {
                a: gen_rotated_anisotropy(nx, ny, nz, theta_deg, kx, ky, kz)?,
                coords: None,
            },
            ProblemSpec::Elasticity3D {
                nx,
                ny,
                nz,
                e,
                nu,
                bc,
            } => {
                let (a, c) = gen_elasticity3d(nx, ny, nz, e, nu, bc)?;
                Problem { a, coords: Some(c) }
            }
            ProblemSpec::Heterogeneous {
                nx,
                ny,
                contrast,
                seed,
            } => Problem {
                a: gen_heterogeneous(nx, ny, contrast, seed)?,
                coords: None,
            },
        })
    }
}

impl FromStr for ProblemSpec {
    type Err = AmgError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| AmgError::Config(format!("generator '{s}': {msg}"));
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = args.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
        let int = |k: usize| -> Result<usize> {
            args.get(k)
                .ok_or_else(|| bad(format!("missing dimension {}", k + 1)))?
                .parse()
                .map_err(|e| bad(format!("{e}")))
        };
        let real = |k: usize, default: f64| -> Result<f64> {
            match args.get(k) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|e| bad(format!("{e}"))),
            }
        };
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "poisson7" | "poisson" => ProblemSpec::Poisson7 {
                nx: int(0)?,
                ny: int(1)?,
                nz: int(2)?,
            },
            "anisotropy" | "rotated-anisotropy" => ProblemSpec::RotatedAnisotropy {
                nx: int(0)?,
                ny: int(1)?,
                nz: int(2)?,
                theta_deg: real(3, 30.0)?,
                kx: real(4, 10.0)?,
                ky: real(5, 1e-3)?,
                kz: real(6, 1e-6)?,
            },
            "elasticity" | "elasticity3d" => ProblemSpec::Elasticity3D {
                nx: int(0)?,
                ny: int(1)?,
                nz: int(2)?,
                e: real(3, 1e6)?,
                nu: real(4, 0.45)?,
                bc: match args.get(5).copied() {
                    None | Some("clamped") => BoundaryCondition::Clamped,
                    Some("free") => BoundaryCondition::Free,
                    Some(o) => return Err(bad(format!("unknown boundary condition '{o}'"))),
                },
            },
            "heterogeneous" => ProblemSpec::Heterogeneous {
                nx: int(0)?,
                ny: int(1)?,
                contrast: real(2, 1e6)?,
                seed: match args.get(3) {
                    None => 1,
                    Some(v) => v.parse().map_err(|e| bad(format!("{e}")))?,
                },
            },
            other => return Err(bad(format!("unknown generator '{other}'"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Poisson7 { nx, ny, nz } => write!(f, "poisson7:{nx},{ny},{nz}"),
            ProblemSpec::RotatedAnisotropy {
                nx,
                ny,
                nz,
                theta_deg,
                kx,
                ky,
                kz,
            } => write!(f, "anisotropy:{nx},{ny},{nz},{theta_deg},{kx},{ky},{kz}"),
            ProblemSpec::Elasticity3D {
                nx,
                ny,
                nz,
                e,
                nu,
                bc,
            } => {
                let bc = match bc {
                    BoundaryCondition::Clamped => "clamped",
                    BoundaryCondition::Free => "free",
                };
                write!(f, "elasticity:{nx},{ny},{nz},{e},{nu},{bc}")
            }
            ProblemSpec::Heterogeneous {
                nx,
                ny,
                contrast,
                seed,
            } => write!(f, "heterogeneous:{nx},{ny},{contrast},{seed}"),
        }
    }
}
