//! Bundled reference inputs: the Abilene backbone and a per-link delay
//! variance profile for it.

use crate::spectral::CovarianceModel;
use crate::topology::Topology;

const ABILENE_TOPOLOGY_CSV: &str = include_str!("../assets/abilene_topology.csv");
const ABILENE_COVARIANCE_CSV: &str = include_str!("../assets/abilene_covariance.csv");

/// The Abilene research backbone: 11 nodes, 30 directed links, unit routing
/// weights. Deleting links can disconnect it, so rebuild checks still apply.
pub fn abilene() -> Topology {
    Topology::from_csv_str("abilene", ABILENE_TOPOLOGY_CSV).expect("bundled topology must parse")
}

/// A reference diagonal covariance for Abilene link delays, in ms^2.
/// Variances are largest on the Kansas City -> Indianapolis link (id 15)
/// and generally higher eastbound than westbound.
pub fn abilene_reference_covariance() -> CovarianceModel {
    let text = ABILENE_COVARIANCE_CSV;
    crate::data_io::parse_covariance_str(text, abilene().link_count())
        .expect("bundled covariance must parse")
}

/// Raw CSV text of the bundled topology, for tools that re-emit it.
pub fn abilene_topology_csv() -> &'static str {
    ABILENE_TOPOLOGY_CSV
}

/// Raw CSV text of the bundled covariance profile.
pub fn abilene_covariance_csv() -> &'static str {
    ABILENE_COVARIANCE_CSV
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_inputs_parse_and_agree() {
        let t = abilene();
        assert_eq!(t.node_count(), 11);
        assert_eq!(t.link_count(), 30);
        assert!(t.is_strongly_connected());
        let cov = abilene_reference_covariance();
        assert_eq!(cov.n_links(), 30);
        let vars = cov.variances();
        let max_id = (0..30)
            .max_by(|&a, &b| vars[a].total_cmp(&vars[b]))
            .unwrap();
        assert_eq!(max_id, 15);
        assert_eq!(t.links()[15].source, t.node_index("Kansas City").unwrap());
        assert_eq!(t.links()[15].target, t.node_index("Indianapolis").unwrap());
    }
}
