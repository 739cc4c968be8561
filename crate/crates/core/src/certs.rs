//! Independent verification and JSON form of non-L-space certificates.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{Config, EdgeHeuristic, Engine, EngineError, NlsCertificate, Status};
use crate::homology;
use crate::slopes::Slope;
use crate::tree::{BoundaryRef, GmTree};

#[derive(Debug, Error)]
pub enum CertError {
    #[error("malformed certificate: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("certificate edge `{0}` does not exist in the manifold")]
    UnknownEdge(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Recheck of one piece: the claimed verdict and one verdict per dual choice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PieceCheck {
    pub id: String,
    pub verdict: Option<Status>,
    pub recheck: Vec<Status>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateReport {
    pub accepted: bool,
    pub per_piece: Vec<PieceCheck>,
    pub mismatches: Vec<String>,
}

/// Dual choices used by the rechecks; two distinct values per piece.
pub const DUAL_CHOICES: [i64; 2] = [0, 1];

pub fn serialize_certificate(cert: &NlsCertificate) -> String {
    serde_json::to_string_pretty(cert).expect("certificate serializes")
}

pub fn parse_certificate(text: &str) -> Result<NlsCertificate, CertError> {
    Ok(serde_json::from_str(text)?)
}

/// Parses a certificate and checks that its edges exist in `tree`.
pub fn parse_certificate_for(text: &str, tree: &GmTree) -> Result<NlsCertificate, CertError> {
    let cert = parse_certificate(text)?;
    if let Some(bad) = cert.edges.iter().find(|e| tree.edge(&e.id).is_none()) {
        return Err(CertError::UnknownEdge(bad.id.clone()));
    }
    Ok(cert)
}

/// The N-filling of piece `index` along the certificate slopes.
pub fn piece_filling(
    tree: &GmTree,
    index: usize,
    slopes: &BTreeMap<&str, Slope>,
    dual_choice: i64,
) -> Result<Option<GmTree>, EngineError> {
    let piece = tree.pieces()[index].clone();
    let alone = GmTree::single(piece)?;
    let mut assignment = BTreeMap::new();
    for e in tree.edges().iter().filter(|e| e.touches(index)) {
        let Some(&alpha) = slopes.get(e.id.as_str()) else { return Ok(None) };
        if e.a.piece == index {
            assignment.insert(BoundaryRef::new(0, e.a.boundary), alpha);
        }
        if e.b.piece == index {
            assignment.insert(BoundaryRef::new(0, e.b.boundary), e.map.apply(alpha));
        }
    }
    let duals = assignment.keys().map(|&b| (b, dual_choice)).collect();
    Ok(Some(alone.n_fill(&assignment, &duals)?))
}

/// Rebuilds every piece's N-filling with two dual choices and decides each
/// with a fresh engine cutting along the last leaf edge.
pub fn verify_certificate(tree: &GmTree, cert: &NlsCertificate, config: &Config) -> Result<CertificateReport, CertError> {
    if !tree.is_closed() {
        return Err(EngineError::NotClosed.into());
    }
    let mut mismatches = Vec::new();
    if cert.b1_shortcut {
        let b1 = homology::h1_invariants(tree).b1;
        if b1 == 0 {
            mismatches.push("b1_shortcut claimed but b1 = 0".to_string());
        }
        return Ok(CertificateReport { accepted: mismatches.is_empty(), per_piece: vec![], mismatches });
    }
    let ids: HashSet<&str> = tree.edges().iter().map(|e| e.id.as_str()).collect();
    let mut slopes: BTreeMap<&str, Slope> = BTreeMap::new();
    for e in &cert.edges {
        if !ids.contains(e.id.as_str()) {
            mismatches.push(format!("unknown edge `{}`", e.id));
        } else if slopes.insert(e.id.as_str(), e.slope).is_some() {
            mismatches.push(format!("edge `{}` listed twice", e.id));
        }
    }
    for e in tree.edges() {
        if !slopes.contains_key(e.id.as_str()) {
            mismatches.push(format!("edge `{}` has no slope", e.id));
        }
    }
    let names: HashSet<&str> = tree.pieces().iter().map(|p| p.name.as_str()).collect();
    for p in &cert.pieces {
        if !names.contains(p.id.as_str()) {
            mismatches.push(format!("unknown piece `{}`", p.id));
        }
    }
    let recheck = Config { heuristic: EdgeHeuristic::LastLeaf, ..*config };
    let per_piece = (0..tree.pieces().len())
        .into_par_iter()
        .map(|i| -> Result<PieceCheck, CertError> {
            let id = tree.pieces()[i].name.clone();
            let verdict = cert.pieces.iter().find(|p| p.id == id).map(|p| p.verdict);
            let mut statuses = Vec::new();
            for k in DUAL_CHOICES {
                match piece_filling(tree, i, &slopes, k)? {
                    Some(filled) => statuses.push(Engine::new(recheck).decide_closed(&filled)?.status()),
                    None => break,
                }
            }
            Ok(PieceCheck { id, verdict, recheck: statuses })
        })
        .collect::<Result<Vec<_>, _>>()?;
    for check in &per_piece {
        match check.verdict {
            None => mismatches.push(format!("piece `{}` missing from certificate", check.id)),
            Some(v) if !v.is_non_l() => mismatches.push(format!("piece `{}` claims {:?}", check.id, v)),
            _ => {}
        }
        for (k, s) in DUAL_CHOICES.iter().zip(&check.recheck) {
            if !s.is_non_l() {
                mismatches.push(format!("piece `{}`: N-filling with dual choice {k} decides {s:?}", check.id));
            }
        }
    }
    Ok(CertificateReport { accepted: mismatches.is_empty(), per_piece, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EdgeSlope;
    use crate::seifert::SeifertPiece;
    use crate::slopes::GluingMap;
    use crate::tree::{validate_tree, Edge};

    fn two_piece() -> GmTree {
        let p = SeifertPiece::new("P", -1, vec![crate::seifert::Fiber::new(1, 2), crate::seifert::Fiber::new(1, 3)], 1);
        let q = SeifertPiece::new("Q", -1, vec![crate::seifert::Fiber::new(1, 2), crate::seifert::Fiber::new(2, 5)], 1);
        validate_tree(vec![p, q], vec![Edge::new("e1", BoundaryRef::new(0, 0), BoundaryRef::new(1, 0), GluingMap::new(0, 1, 1, 0))])
            .unwrap()
    }

    #[test]
    fn json_round_trip_and_errors() {
        let cert = NlsCertificate {
            edges: vec![EdgeSlope { id: "e1".into(), slope: Slope::new(-3, 2).unwrap() }],
            pieces: vec![crate::engine::PieceRecord { id: "P".into(), verdict: Status::NonLSpace, filling: None }],
            b1_shortcut: false,
        };
        let text = serialize_certificate(&cert);
        assert!(text.contains("\"slope\": \"-3/2\""));
        assert_eq!(parse_certificate(&text).unwrap(), cert);
        assert!(parse_certificate(r#"{"edges":[{"slope":"1/2"}],"pieces":[],"b1_shortcut":false}"#).is_err());
        assert!(parse_certificate("not json").is_err());
        assert!(matches!(parse_certificate_for(&text.replace("e1", "e9"), &two_piece()), Err(CertError::UnknownEdge(_))));
    }

    #[test]
    fn engine_certificates_verify() {
        let tree = two_piece();
        let engine = Engine::new(Config::default());
        match engine.certificate_search(&tree).unwrap() {
            Some(cert) => {
                let report = verify_certificate(&tree, &cert, &Config::default()).unwrap();
                assert!(report.accepted, "{report:?}");
                let mut bad = cert.clone();
                bad.edges[0].id = "e7".into();
                assert!(!verify_certificate(&tree, &bad, &Config::default()).unwrap().accepted);
            }
            None => {
                let fake = NlsCertificate {
                    edges: vec![EdgeSlope { id: "e1".into(), slope: Slope::ZERO }],
                    pieces: vec![],
                    b1_shortcut: false,
                };
                assert!(!verify_certificate(&tree, &fake, &Config::default()).unwrap().accepted);
            }
        }
    }
}
