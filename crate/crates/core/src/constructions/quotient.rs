//! A ball in `V × S` pushed down to `V × X`, with `X = S/τ_S` the annulus
//! quotient of the strip.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::ball::EmbeddedBall;
use crate::map::{default_step, fd_jacobian, SmoothMap};
use crate::region::SharedRegion;
use crate::symplectic::capacity_level;
use crate::strip::AnnulusQuotient;

#[derive(Clone)]
pub struct QuotientBallMap {
    pub ball: EmbeddedBall,
    pub quotient: Arc<AnnulusQuotient>,
    /// Range of strip translates searched by [`preimages`](Self::preimages).
    pub lifts: (i64, i64),
}

impl QuotientBallMap {
    pub fn new(ball: EmbeddedBall, quotient: Arc<AnnulusQuotient>) -> Self {
        let lifts = (-1, quotient.strip.count as i64 + 1);
        Self { ball, quotient, lifts }
    }

    fn v_dim(&self) -> usize {
        self.ball.map.dim_out() - 2
    }

    /// All points of the ball mapping to `y`, one per strip translate.
    pub fn preimages(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let dv = self.v_dim();
        let Some(base) = self.quotient.inverse(&y[dv..]) else {
            return Vec::new();
        };
        let step = self.quotient.strip.step;
        let mut out = Vec::new();
        for k in self.lifts.0..=self.lifts.1 {
            let mut z = y[..dv].to_vec();
            z.push(base[0] + k as f64 * step);
            z.push(base[1]);
            if let Some(x) = self.ball.map.inverse(&z) {
                let back = self.ball.map.eval(&x);
                let close = back.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-7 * (1.0 + b.abs()));
                let level = capacity_level(&x, &self.ball.descriptor.center);
                if close && level < self.ball.capacity() && self.ball.map.domain().contains(&x) {
                    out.push(x);
                }
            }
        }
        out
    }
}

impl SmoothMap for QuotientBallMap {
    fn dim_in(&self) -> usize {
        self.ball.map.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.ball.map.dim_out()
    }

    fn domain(&self) -> SharedRegion {
        self.ball.map.domain()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        let dv = self.v_dim();
        let mut y = self.ball.map.eval(p);
        let q = self.quotient.eval(&y[dv..]);
        y.truncate(dv);
        y.extend(q);
        y
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let dv = self.v_dim();
        let j = match self.ball.map.jacobian(p) {
            Some(j) => j,
            None => fd_jacobian(self.ball.map.as_ref(), p, default_step(self.domain().as_ref())).ok()?,
        };
        let y = self.ball.map.eval(p);
        let jq = self.quotient.jacobian(&y[dv..])?;
        let mut outer = DMatrix::identity(dv + 2, dv + 2);
        outer.view_mut((dv, dv), (2, 2)).copy_from(&jq);
        Some(outer * j)
    }

    fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.preimages(y).into_iter().next()
    }

    fn name(&self) -> String {
        format!("quotient[{}]", self.ball.map.name())
    }
}
