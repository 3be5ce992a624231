//! Scalar, one-coordinate-at-a-time reference for the partially adaptive
//! update. Kept deliberately independent of the library: no shared helpers,
//! plain `powf`/`powi`, explicit loops.

#[derive(Debug, Clone, Copy, Default)]
pub struct Coord {
    pub theta: f64,
    pub m: f64,
    pub v: f64,
    pub vhat: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleHp {
    pub beta1: f64,
    pub beta2: f64,
    pub p: f64,
    pub eps: f64,
    pub wd: f64,
}

/// One update of one coordinate at step `t` (1-based). Returns the
/// bias-corrected second moment this step produced, for clamp checks.
pub fn padam_coord(c: &mut Coord, grad: f64, t: i32, lr: f64, hp: OracleHp) -> f64 {
    let g = grad + hp.wd * c.theta;
    c.m = hp.beta1 * c.m + (1.0 - hp.beta1) * g;
    let m_hat = c.m / (1.0 - hp.beta1.powi(t));
    c.v = hp.beta2 * c.v + (1.0 - hp.beta2) * g * g;
    let v_corr = c.v / (1.0 - hp.beta2.powi(t));
    if v_corr > c.vhat {
        c.vhat = v_corr;
    }
    let denom = if hp.p == 0.0 {
        1.0
    } else {
        (c.vhat.sqrt() + hp.eps).powf(2.0 * hp.p)
    };
    c.theta -= lr * m_hat / denom;
    v_corr
}

/// Full trajectory over a vector of coordinates; `grads[s][i]` is the raw
/// gradient of coordinate `i` at step `s`. Returns theta after every step.
pub fn padam_trajectory(
    theta0: &[f64],
    grads: &[Vec<f64>],
    lr: f64,
    hp: OracleHp,
) -> Vec<Vec<f64>> {
    let mut coords: Vec<Coord> = theta0
        .iter()
        .map(|&theta| Coord {
            theta,
            ..Coord::default()
        })
        .collect();
    let mut out = Vec::with_capacity(grads.len());
    for (s, g) in grads.iter().enumerate() {
        for (c, &gi) in coords.iter_mut().zip(g) {
            padam_coord(c, gi, s as i32 + 1, lr, hp);
        }
        out.push(coords.iter().map(|c| c.theta).collect());
    }
    out
}
