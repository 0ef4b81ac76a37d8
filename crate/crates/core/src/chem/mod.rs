//! SMILES parsing, atom featurization, fingerprints and ligand properties.

mod elements;
pub mod features;
pub mod fingerprint;
mod graph;
mod random;
pub mod properties;
mod smiles;

pub use elements::Element;
pub use features::{atom_features, featurize_atoms, feature_tensor, AtomFeatureVector, ATOM_FEATURE_DIM};
pub use fingerprint::{morgan_fingerprint, Fingerprint, DEFAULT_FP_BITS, DEFAULT_FP_RADIUS};
pub use graph::{Atom, Bond, BondOrder, Chirality, MolecularGraph};
pub use random::random_molecule;
pub use properties::{extract_ligand_properties, LigandPropertySet};
pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChemError {
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("atom {atom} ({element}) has impossible valence {valence}")]
    Valence { atom: usize, element: String, valence: u32 },
    #[error(transparent)]
    Smiles(#[from] SmilesError),
    #[error("{0}")]
    Contract(String),
}
