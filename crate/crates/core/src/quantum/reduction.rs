use serde::Serialize;

use crate::adversary_sim::EpisodeSource;
use crate::convex::ConvexClass;
use crate::error::{Error, Result};
use crate::prob::{kl_raw, ExtReal};

use super::audit::CompatibilityReport;
use super::ops::{apply_measurement, quantum_relative_entropy};
use super::restricted::measured_image;
use super::state::{DensityMatrix, MeasurementMenu, Povm, StateClass};

/// A quantum state class observed through one fixed POVM per block.
///
/// As an [`EpisodeSource`] it takes weights over the vertices of the
/// classical image class, mixes the corresponding quantum states and applies
/// the Born rule, so simulated quantum episodes can be compared draw for
/// draw with classical episodes on the image.
#[derive(Debug, Clone)]
pub struct MeasuredStateClass {
    states: StateClass,
    povm: Povm,
    /// For each image vertex, the first state vertex that maps onto it.
    representatives: Vec<usize>,
}

impl MeasuredStateClass {
    pub fn new(states: StateClass, povm: Povm) -> Result<(Self, ConvexClass)> {
        if states.dim() != povm.dim() {
            return Err(Error::DimensionMismatch(format!(
                "POVM acts on dimension {}, states have dimension {}",
                povm.dim(),
                states.dim()
            )));
        }
        let (image, map) = measured_image(&povm, &states)?;
        let representatives = (0..image.len())
            .map(|j| map.iter().position(|&m| m == j).expect("every image vertex has a preimage"))
            .collect();
        Ok((
            MeasuredStateClass {
                states,
                povm,
                representatives,
            },
            image,
        ))
    }

    pub fn states(&self) -> &StateClass {
        &self.states
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }
}

impl EpisodeSource for MeasuredStateClass {
    fn alphabet_size(&self) -> usize {
        self.povm.len()
    }

    fn num_weights(&self) -> usize {
        self.representatives.len()
    }

    fn outcome_distribution(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let mut state_weights = vec![0.0; self.states.len()];
        for (&rep, &w) in self.representatives.iter().zip(weights) {
            state_weights[rep] = w;
        }
        let rho = self.states.mix(&state_weights)?;
        Ok(apply_measurement(&self.povm, &rho)?.weights().to_vec())
    }
}

/// Classical images of two state classes under one menu element.
#[derive(Debug, Clone)]
pub struct BlockReduction {
    /// Number of copies each POVM acts on.
    pub block_size: usize,
    pub povm_index: usize,
    pub p_image: ConvexClass,
    pub q_image: ConvexClass,
    pub p_source: MeasuredStateClass,
    pub q_source: MeasuredStateClass,
}

/// Turns a quantum test between `R` and `S` into a classical one by applying
/// menu element `povm_index` to each block of `block_size` copies.
///
/// The reduction is sound against adaptive adversaries only when the menu is
/// compatible with both families, so passing compatibility reports for both
/// must be supplied.
pub fn block_reduction(
    menu: &MeasurementMenu,
    povm_index: usize,
    block_size: usize,
    r: &StateClass,
    s: &StateClass,
    compatibility: &[&CompatibilityReport],
) -> Result<BlockReduction> {
    if compatibility.len() < 2 {
        return Err(Error::CompatibilityUnverified(
            "compatibility reports for both state families are required".into(),
        ));
    }
    if let Some(i) = compatibility.iter().position(|c| !c.compatible) {
        let failures = compatibility[i].failures().count();
        return Err(Error::CompatibilityUnverified(format!(
            "report {i} lists {failures} residual state(s) outside the target class"
        )));
    }
    if block_size == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let povm = menu
        .povms()
        .get(povm_index)
        .ok_or_else(|| Error::InvalidArgument(format!("menu has no element {povm_index}")))?
        .clone();
    let (p_source, p_image) = MeasuredStateClass::new(r.clone(), povm.clone())?;
    let (q_source, q_image) = MeasuredStateClass::new(s.clone(), povm)?;
    Ok(BlockReduction {
        block_size,
        povm_index,
        p_image,
        q_image,
        p_source,
        q_source,
    })
}

/// Both sides of the data-processing inequality for one measurement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonotonicityCheck {
    pub measured: ExtReal,
    pub quantum: ExtReal,
    /// `measured ≤ quantum + 1e-9`.
    pub holds: bool,
}

pub fn monotonicity_check(m: &Povm, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<MonotonicityCheck> {
    let measured = kl_raw(apply_measurement(m, rho)?.weights(), apply_measurement(m, sigma)?.weights());
    let quantum = quantum_relative_entropy(rho, sigma)?;
    let holds = match (measured, quantum) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a <= b + 1e-9,
        (a, b) => a <= b,
    };
    Ok(MonotonicityCheck {
        measured,
        quantum,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::solve_stein;
    use crate::prob::kl_divergence;
    use crate::quantum::audit::{compatibility_check, Membership};
    use crate::quantum::state::BipartiteStructure;

    #[test]
    fn singleton_reduction_matches_measured_divergence() {
        let rho = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
        let sigma = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let z = Povm::computational(2).unwrap();
        let menu = MeasurementMenu::new(vec![z.clone()]).unwrap();
        let r = StateClass::singleton(rho.clone());
        let s = StateClass::singleton(sigma.clone());
        let structure = BipartiteStructure::bipartite(2, 2).unwrap();
        let rep_r = compatibility_check(
            &menu,
            &StateClass::singleton(rho.tensor(&rho).unwrap()),
            &Membership::Hull(&r),
            &structure,
        )
        .unwrap();
        let rep_s = compatibility_check(
            &menu,
            &StateClass::singleton(sigma.tensor(&sigma).unwrap()),
            &Membership::Hull(&s),
            &structure,
        )
        .unwrap();
        let red = block_reduction(&menu, 0, 1, &r, &s, &[&rep_r, &rep_s]).unwrap();
        assert_eq!(red.p_image.len(), 1);
        let sol = solve_stein(&red.p_image, &red.q_image, 1e-12).unwrap();
        let direct = kl_divergence(&apply_measurement(&z, &rho).unwrap(), &apply_measurement(&z, &sigma).unwrap()).unwrap();
        assert!((sol.exponent.finite().unwrap() - direct.finite().unwrap()).abs() < 1e-14);
        assert!(block_reduction(&menu, 0, 1, &r, &s, &[&rep_r]).is_err());
    }

    #[test]
    fn measured_source_matches_image_vertices() {
        let states = StateClass::new(vec![
            DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(),
            DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(),
            DensityMatrix::maximally_mixed(2).unwrap(),
        ])
        .unwrap();
        let (src, image) = MeasuredStateClass::new(states, Povm::computational(2).unwrap()).unwrap();
        assert_eq!(image.len(), 2);
        for j in 0..2 {
            let mut w = vec![0.0; 2];
            w[j] = 1.0;
            assert_eq!(src.outcome_distribution(&w).unwrap(), image.vertex(j).weights());
        }
    }
}
