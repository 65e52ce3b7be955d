use std::io::{Read as _, Write as _};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::fft::{fft_inplace, omega};
use crate::lattice::LatticeSpec;
use crate::spline::{bspline3, bspline3_hat};
use crate::Result;

/// 10-point Gauss–Legendre rule on [−1, 1].
const GL_X: [f64; 10] = [
    -0.973_906_528_517_171_7,
    -0.865_063_366_688_984_5,
    -0.679_409_568_299_024_4,
    -0.433_395_394_129_247_2,
    -0.148_874_338_981_631_2,
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 10] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_35,
    0.219_086_362_515_982_04,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_14,
];

/// Precomputed spectrum of the convolution kernel ζ(θ,ρ) = δ(cosθ − e^ρ)
/// over the padded lattice frequencies.
#[derive(Debug, Clone)]
pub struct KernelSpectrum {
    pub data: Array2<Complex64>,
    pub dtheta: f64,
    pub drho: f64,
    pub theta_k: f64,
    pub rho_floor: f64,
    pub osf: usize,
}

/// ζ̂(0, 0) in closed form: ∫ secθ dθ over [−θk, θk].
pub fn zeta_hat_dc(theta_k: f64) -> f64 {
    2.0 * (1.0 / theta_k.cos() + theta_k.tan()).ln()
}

/// Composite Gauss–Legendre nodes and weights over [−θk, θk], panel
/// count scaled with the largest lattice frequency so the oscillatory
/// integrand stays resolved.
fn quadrature(theta_k: f64, dtheta: f64, drho: f64, rho_floor: f64) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let wmax = PI / dtheta * theta_k + PI / drho * rho_floor.abs();
    let panels = ((wmax / 3.0) as usize).max(32);
    let mut nodes = Vec::with_capacity(panels * GL_X.len());
    let mut weights = Vec::with_capacity(panels * GL_X.len());
    let h = 2.0 * theta_k / panels as f64;
    for p in 0..panels {
        let lo = -theta_k + p as f64 * h;
        let mid = lo + h / 2.0;
        for (&x, &w) in GL_X.iter().zip(&GL_W) {
            nodes.push(mid + h / 2.0 * x);
            weights.push(h / 2.0 * w);
        }
    }
    (nodes, weights)
}

/// Evaluate ζ̂ on the lattice's frequency grid: for every ρ-frequency
/// row, the curve integral ∫ secθ·e^{−i(ω₁θ + ω₂·log cosθ)} dθ is
/// computed by a 1-D nonuniform FFT in θ (B₃ gridding on an `osf`×
/// oversampled fine grid, spectrum divided by the fine-grid B̂₃, coarse
/// bins extracted by exact integer indexing).
pub fn precompute_zeta_hat(lattice: &LatticeSpec, osf: usize) -> KernelSpectrum {
    let (m, n) = (lattice.n_theta, lattice.n_rho);
    let (dtheta, drho) = (lattice.dtheta, lattice.drho);
    let theta_k = lattice.theta_k;
    let rho_floor = lattice.rho0;
    let (th, w) = quadrature(theta_k, dtheta, drho, rho_floor);

    let sec: Vec<f64> = th.iter().map(|t| 1.0 / t.cos()).collect();
    let logcos: Vec<f64> = th.iter().map(|t| t.cos().ln()).collect();

    let mf = m * osf;
    let fine = dtheta / osf as f64;
    // Per-sample 4-tap stencils on the fine θ grid, fixed across rows.
    let mut base = Vec::with_capacity(th.len());
    let mut stencils = Vec::with_capacity(th.len());
    for &t in &th {
        let xi = t / fine;
        let i0 = xi.floor();
        let frac = xi - i0;
        base.push(i0 as i64);
        stencils.push([
            bspline3(frac + 1.0),
            bspline3(frac),
            bspline3(frac - 1.0),
            bspline3(frac - 2.0),
        ]);
    }
    let bhat_fine: Vec<f64> = (0..mf).map(|k| bspline3_hat(omega(k, mf))).collect();
    // Coarse bin k lives at signed frequency index k (k ≤ m/2) or k − m,
    // taken modulo the fine grid length.
    let bins: Vec<usize> = (0..m)
        .map(|k| {
            let signed = if k <= m / 2 { k as i64 } else { k as i64 - m as i64 };
            signed.rem_euclid(mf as i64) as usize
        })
        .collect();

    let mut data = Array2::<Complex64>::zeros((m, n));
    let mut fine_row = vec![Complex64::ZERO; mf];
    for col in 0..n {
        let w2 = omega(col, n) / drho;
        fine_row.fill(Complex64::ZERO);
        for j in 0..th.len() {
            let c = Complex64::from_polar(w[j] * sec[j], -w2 * logcos[j]);
            let st = &stencils[j];
            for (d, &s) in st.iter().enumerate() {
                let idx = (base[j] - 1 + d as i64).rem_euclid(mf as i64) as usize;
                fine_row[idx] += c * s;
            }
        }
        fft_inplace(&mut fine_row, false);
        for k in 0..m {
            let b = bins[k];
            data[(k, col)] = fine_row[b] / bhat_fine[b];
        }
    }

    KernelSpectrum {
        data,
        dtheta,
        drho,
        theta_k,
        rho_floor,
        osf,
    }
}

/// Content-hash key of a kernel spectrum's inputs.
pub fn cache_key(lattice: &LatticeSpec, osf: usize) -> String {
    let mut h = Sha256::new();
    h.update(b"LPZK1");
    for v in [
        lattice.dtheta,
        lattice.drho,
        lattice.theta_k,
        lattice.rho0,
        lattice.n_theta as f64,
        lattice.n_rho as f64,
        osf as f64,
    ] {
        h.update(v.to_le_bytes());
    }
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

const CACHE_MAGIC: &[u8; 4] = b"LPZK";

fn write_cache_file(path: &Path, spec: &KernelSpectrum) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    let (m, n) = spec.data.dim();
    buf.write_u32::<LittleEndian>(m as u32)?;
    buf.write_u32::<LittleEndian>(n as u32)?;
    buf.write_u32::<LittleEndian>(spec.osf as u32)?;
    for v in [spec.dtheta, spec.drho, spec.theta_k, spec.rho_floor] {
        buf.write_f64::<LittleEndian>(v)?;
    }
    for v in spec.data.iter() {
        buf.write_f64::<LittleEndian>(v.re)?;
        buf.write_f64::<LittleEndian>(v.im)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_cache_file(path: &Path, lattice: &LatticeSpec, osf: usize) -> Option<KernelSpectrum> {
    let mut f = std::fs::File::open(path).ok()?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic).ok()?;
    if &magic != CACHE_MAGIC {
        return None;
    }
    let m = f.read_u32::<LittleEndian>().ok()? as usize;
    let n = f.read_u32::<LittleEndian>().ok()? as usize;
    let file_osf = f.read_u32::<LittleEndian>().ok()? as usize;
    let dtheta = f.read_f64::<LittleEndian>().ok()?;
    let drho = f.read_f64::<LittleEndian>().ok()?;
    let theta_k = f.read_f64::<LittleEndian>().ok()?;
    let rho_floor = f.read_f64::<LittleEndian>().ok()?;
    if m != lattice.n_theta
        || n != lattice.n_rho
        || file_osf != osf
        || dtheta != lattice.dtheta
        || drho != lattice.drho
        || theta_k != lattice.theta_k
        || rho_floor != lattice.rho0
    {
        return None;
    }
    let mut data = Array2::<Complex64>::zeros((m, n));
    for v in data.iter_mut() {
        let re = f.read_f64::<LittleEndian>().ok()?;
        let im = f.read_f64::<LittleEndian>().ok()?;
        *v = Complex64::new(re, im);
    }
    Some(KernelSpectrum {
        data,
        dtheta,
        drho,
        theta_k,
        rho_floor,
        osf,
    })
}

/// Like [`precompute_zeta_hat`], backed by an on-disk cache directory.
/// Cache files are pure caches: safe to delete, rebuilt on demand.
pub fn precompute_zeta_hat_cached(
    lattice: &LatticeSpec,
    osf: usize,
    cache_dir: Option<&Path>,
) -> KernelSpectrum {
    if let Some(dir) = cache_dir {
        let path = dir.join(format!("{}.zeta", cache_key(lattice, osf)));
        if let Some(spec) = read_cache_file(&path, lattice, osf) {
            return spec;
        }
        let spec = precompute_zeta_hat(lattice, osf);
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = write_cache_file(&path, &spec);
        }
        spec
    } else {
        precompute_zeta_hat(lattice, osf)
    }
}
