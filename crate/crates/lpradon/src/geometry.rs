use crate::error::Error;
use crate::Result;

const ANGLE_GUARD: f64 = 1e-6;

/// Geometry constants placing the squared-coordinates data rectangle
/// [s_lo, s_hi]×[0, 1] inside the unit-circle sector of opening `beta`
/// by the similarity (rotation `alpha`, scale `a`, shift `origin`).
#[derive(Debug, Clone, Copy)]
pub struct SectorGeometry {
    /// Sector opening angle: arctan(q²_max) − arctan(q²_min).
    pub beta: f64,
    /// Rotation angle: midpoint of the arctan(q²) band.
    pub alpha: f64,
    /// Similarity scale factor.
    pub a: f64,
    /// Similarity shift.
    pub origin: [f64; 2],
    /// Inner radius: the smallest edge-ray projection of the mapped
    /// rectangle corners; in-sector radii stay above a_r·cos(beta).
    pub a_r: f64,
    /// Data-cut angle arctan(k²) for mute slope k (bounds support only).
    pub gamma: f64,
    /// Center of the squared-coordinates rectangle, s axis.
    pub s_center: f64,
    /// Center of the squared-coordinates rectangle, y axis.
    pub y_center: f64,
}

/// Geometry for the full band: s ∈ [τ_min², 1], y ∈ [0, 1]. The mute
/// slope defaults to τ_min (the first-event line).
pub fn build_geometry(
    q_min: f64,
    q_max: f64,
    tau_min: f64,
    mute_slope: Option<f64>,
) -> Result<SectorGeometry> {
    if !(tau_min > 0.0 && tau_min < 1.0) {
        return Err(Error::config(format!("tau_min must lie in (0,1), got {tau_min}")));
    }
    let k = mute_slope.unwrap_or(tau_min);
    if !(k > 0.0) {
        return Err(Error::config(format!("degenerate mute slope {k}")));
    }
    SectorGeometry::for_band(q_min, q_max, tau_min * tau_min, 1.0, (k * k).atan())
}

impl SectorGeometry {
    /// Geometry for a sub-band: s ∈ [s_lo, s_hi], y ∈ [0, 1].
    pub fn for_band(q_min: f64, q_max: f64, s_lo: f64, s_hi: f64, gamma: f64) -> Result<Self> {
        if !(q_min > 0.0) {
            return Err(Error::config(format!("q_min must be positive, got {q_min}")));
        }
        if !(q_max > q_min) {
            return Err(Error::config(format!(
                "empty slowness interval: q_min={q_min}, q_max={q_max}"
            )));
        }
        if !(s_hi > s_lo && s_lo >= 0.0) {
            return Err(Error::config(format!("bad s interval [{s_lo}, {s_hi}]")));
        }
        let (q2min, q2max) = (q_min * q_min, q_max * q_max);
        let beta = q2max.atan() - q2min.atan();
        let alpha = (q2max.atan() + q2min.atan()) / 2.0;

        let h1 = (s_hi - s_lo) / 2.0;
        let h2 = 0.5;
        let hn = h1.hypot(h2);
        let ph = h2.atan2(h1);
        let v1 = hn * ((alpha + ph).sin() / (beta / 2.0).tan() + (alpha - ph).cos());
        let v2 = hn * ((alpha + ph).cos() * (beta / 2.0).tan() + (alpha - ph).sin());
        let mut a = 1.0 / v1.hypot(v2);
        let mut origin = [
            a * hn * (alpha + ph).sin() / (beta / 2.0).tan(),
            a * hn * (alpha + ph).cos() * (beta / 2.0).tan(),
        ];
        if !a.is_finite() || !origin[0].is_finite() || !origin[1].is_finite() {
            return Err(Error::config("data rectangle not inscribable in sector".to_string()));
        }

        let (ca, sa) = (alpha.cos(), alpha.sin());
        let corner = |sx: f64, sy: f64, a: f64, origin: [f64; 2]| {
            let (dx, dy) = (sx * h1, sy * h2);
            [
                origin[0] + a * (ca * dx - sa * dy),
                origin[1] + a * (sa * dx + ca * dy),
            ]
        };
        let signs = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
        // Shrink if rounding pushed a mapped corner past the unit circle.
        let r_max = signs
            .iter()
            .map(|&(sx, sy)| {
                let c = corner(sx, sy, a, origin);
                c[0].hypot(c[1])
            })
            .fold(0.0, f64::max);
        if r_max > 1.0 + 1e-12 {
            a /= r_max;
            origin[0] /= r_max;
            origin[1] /= r_max;
        }
        let mut a_r = f64::INFINITY;
        for &(sx, sy) in &signs {
            let c = corner(sx, sy, a, origin);
            let ang = c[1].atan2(c[0]);
            if ang.abs() > beta / 2.0 + 1e-9 {
                return Err(Error::numerical(format!(
                    "mapped corner leaves the sector: angle {ang}, half-opening {}",
                    beta / 2.0
                )));
            }
            for sgn in [-1.0, 1.0] {
                let d = [(sgn * beta / 2.0).cos(), (sgn * beta / 2.0).sin()];
                a_r = a_r.min(c[0] * d[0] + c[1] * d[1]);
            }
        }
        if !(a_r > 0.0 && a_r < 1.0) {
            return Err(Error::numerical(format!("inner radius out of range: a_r={a_r}")));
        }

        Ok(SectorGeometry {
            beta,
            alpha,
            a,
            origin,
            a_r,
            gamma,
            s_center: (s_lo + s_hi) / 2.0,
            y_center: 0.5,
        })
    }

    /// Similarity T: rotate by α, scale by a, shift by O, applied to
    /// the rectangle-centered squared coordinates.
    pub fn map_t(&self, s: f64, y: f64) -> (f64, f64) {
        let (ds, dy) = (s - self.s_center, y - self.y_center);
        let (ca, sa) = (self.alpha.cos(), self.alpha.sin());
        (
            self.a * (ca * ds - sa * dy) + self.origin[0],
            self.a * (sa * ds + ca * dy) + self.origin[1],
        )
    }

    pub fn map_t_inv(&self, u: f64, v: f64) -> (f64, f64) {
        let (du, dv) = (u - self.origin[0], v - self.origin[1]);
        let (ca, sa) = (self.alpha.cos(), self.alpha.sin());
        (
            (ca * du + sa * dv) / self.a + self.s_center,
            (-sa * du + ca * dv) / self.a + self.y_center,
        )
    }

    /// Line parameters (θ, p) of the mapped Radon line for (τ, q): the
    /// image of the line s = τ² + q²·y under T, in normal form.
    pub fn theta_rho_radon(&self, tau: f64, q: f64) -> (f64, f64) {
        let psi = (q * q).atan();
        let theta = self.alpha - psi;
        let p = self.a * psi.cos() * (tau * tau - self.s_center + self.y_center * psi.tan())
            + self.origin[0] * theta.cos()
            + self.origin[1] * theta.sin();
        (theta, p)
    }

    /// Transform S: the point image of Radon parameters (τ², q²).
    pub fn map_s(&self, tau_sq: f64, q_sq: f64) -> Result<(f64, f64)> {
        let psi = q_sq.atan();
        let theta = self.alpha - psi;
        if theta.abs() >= std::f64::consts::FRAC_PI_2 - ANGLE_GUARD
            || psi >= std::f64::consts::FRAC_PI_2 - ANGLE_GUARD
        {
            return Err(Error::numerical(format!(
                "map_s tangent blow-up at q²={q_sq} (theta={theta})"
            )));
        }
        let (_, p) = self.theta_rho_radon(tau_sq.max(0.0).sqrt(), q_sq.max(0.0).sqrt());
        Ok((p * theta.cos(), p * theta.sin()))
    }

    pub fn map_s_inv(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        let theta = v.atan2(u);
        let psi = self.alpha - theta;
        if psi.abs() >= std::f64::consts::FRAC_PI_2 - ANGLE_GUARD {
            return Err(Error::numerical(format!("map_s_inv tangent blow-up at theta={theta}")));
        }
        let q_sq = psi.tan();
        let p = u.hypot(v);
        let tau_sq = (p - self.origin[0] * theta.cos() - self.origin[1] * theta.sin())
            / (self.a * psi.cos())
            + self.s_center
            - self.y_center * psi.tan();
        Ok((tau_sq, q_sq))
    }

    /// Composed data map (φ, η) = P₁ ∘ T (t², x²); also returns the
    /// intermediate radius r = e^η.
    pub fn phi_eta_data(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let (u, v) = self.map_t(t * t, x * x);
        let r = u.hypot(v);
        (v.atan2(u), r.ln(), r)
    }

    /// Composed Radon map (θ, ρ) = P₂ ∘ S (τ², q²).
    pub fn phi_eta_radon(&self, tau: f64, q: f64) -> Result<(f64, f64)> {
        let (theta, p) = self.theta_rho_radon(tau, q);
        if !(p > 0.0) {
            return Err(Error::numerical(format!(
                "non-positive radius p={p} for (tau={tau}, q={q})"
            )));
        }
        Ok((theta, p.ln()))
    }

    /// Jacobian determinant of (t, x) → (φ, η): 4·t·x·a²/r², i.e. 2x
    /// times a smooth bounded factor (the x→0 singularity of the
    /// squared-coordinates weight cancels against it).
    pub fn jacobian_data(&self, t: f64, x: f64) -> f64 {
        let (_, _, r) = self.phi_eta_data(t, x);
        4.0 * t * x * self.a * self.a / (r * r)
    }
}

/// P₁: Cartesian to log-polar, (u, v) → (ρ, θ).
pub fn map_p1(u: f64, v: f64) -> Result<(f64, f64)> {
    let r = u.hypot(v);
    if !(r > 0.0) {
        return Err(Error::numerical("map_p1 at the origin".to_string()));
    }
    Ok((r.ln(), v.atan2(u)))
}

pub fn map_p1_inv(rho: f64, theta: f64) -> (f64, f64) {
    let r = rho.exp();
    (r * theta.cos(), r * theta.sin())
}

/// P₂: Radon parameters to log-polar line coordinates,
/// (τ², q²) → (log(τ²·cos(arctan q²)), −arctan q²).
pub fn map_p2(tau_sq: f64, q_sq: f64) -> Result<(f64, f64)> {
    let psi = q_sq.atan();
    let arg = tau_sq * psi.cos();
    if !(arg > 0.0) {
        return Err(Error::numerical(format!("map_p2 log of non-positive value {arg}")));
    }
    Ok((arg.ln(), -psi))
}
