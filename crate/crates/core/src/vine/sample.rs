//! Inverse-Rosenblatt sampling from a vine model.
//!
//! The structure is peeled from the top tree down: the single link of the
//! highest tree determines the last variable in the sampling order, its
//! a-side parent is the top link of the remaining sub-vine, and so on.
//! Each peeled variable carries the chain of links whose inverse
//! h-functions transform a fresh uniform into the variable's value given
//! the already-sampled ones. Rows are generated from independent seeded
//! streams, so parallel and serial generation agree.

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::clamp_unit;
use crate::vine::{Side, VineModel};

#[derive(Debug, Clone)]
struct ChainStep {
    link: usize,
    /// Side of the link the peeled variable sits on.
    target_side: Side,
}

#[derive(Debug, Clone)]
pub(crate) struct SamplingPlan {
    /// Variables in sampling order; order[0] is drawn directly.
    order: Vec<u32>,
    /// chains[t] (t >= 1) lists the links for variable order[t], from the
    /// top level down to level 1.
    chains: Vec<Vec<ChainStep>>,
}

impl SamplingPlan {
    pub fn build(model: &VineModel) -> Result<SamplingPlan> {
        let structure = model.structure();
        let d = structure.d();
        let links = structure.links();

        let mut order = vec![0u32; d];
        let mut chains: Vec<Vec<ChainStep>> = vec![Vec::new(); d];

        // The single link of the top tree.
        let mut top = structure.level_links(d - 1)[0];
        for t in (1..d).rev() {
            let link = &links[top];
            debug_assert_eq!(link.level, t);
            // Peel the b-side variable of the current top link.
            order[t] = link.b;
            let mut chain = Vec::with_capacity(t);
            let mut cur = top;
            let mut side = Side::B;
            loop {
                chain.push(ChainStep {
                    link: cur,
                    target_side: side,
                });
                let cur_link = &links[cur];
                if cur_link.level == 1 {
                    break;
                }
                let parent = match side {
                    Side::A => cur_link.a_parent,
                    Side::B => cur_link.b_parent,
                }
                .ok_or_else(|| Error::NotRealizable {
                    target: order[t],
                    given: cur_link.cond.to_string(),
                })?;
                side = parent.side;
                cur = parent.link;
            }
            chains[t] = chain;
            if t > 1 {
                let parent = link.a_parent.ok_or_else(|| Error::NotRealizable {
                    target: link.a,
                    given: link.cond.to_string(),
                })?;
                top = parent.link;
            } else {
                order[0] = link.a;
            }
        }
        Ok(SamplingPlan { order, chains })
    }
}

impl VineModel {
    /// Draw `n` rows from the model. Deterministic for a given seed: row i
    /// consumes stream i of a counter-based generator seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one sample".into()));
        }
        let plan = SamplingPlan::build(self)?;
        let d = self.d();
        let structure = self.structure();
        let mut rows = Vec::with_capacity(n);
        for row_idx in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row_idx as u64 + 1);
            let w: Vec<f64> = (0..d).map(|_| clamp_unit(rng.random::<f64>())).collect();

            // Coordinates are filled in sampling order; entries not yet
            // assigned are never read by the recursion.
            let mut u = vec![0.5; d];
            let mut memo = self.new_memo();
            u[structure.coord(plan.order[0])] = w[0];
            for t in 1..d {
                let mut value = w[t];
                for step in &plan.chains[t] {
                    let given_side = step.target_side.other();
                    let given = self.side_value(step.link, given_side, &u, &mut memo)?;
                    value = self.copulas()[step.link].h_inverse(value, given)?;
                }
                u[structure.coord(plan.order[t])] = value;
            }
            rows.push(u);
        }
        Ok(rows)
    }
}
