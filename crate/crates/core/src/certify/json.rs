use serde::{Deserialize, Serialize};

use crate::polyring::{parse_polynomial, parse_rational, Rational};

use super::certificate::{Certificate, ConeKind};
use super::sos::SosExpression;
use super::CertifyError;

#[derive(Debug, Serialize, Deserialize)]
struct CertificateFile {
    gamma: String,
    k: u32,
    kind: String,
    #[serde(default)]
    ideal: Vec<IdealEntry>,
    #[serde(default)]
    cone: Vec<ConeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IdealEntry {
    i: usize,
    phi: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConeEntry {
    #[serde(rename = "J")]
    subset: Vec<usize>,
    sos: Vec<SquareEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquareEntry {
    w: String,
    p: String,
}

/// Serializes with one-based `i` and `J` indices.
pub fn certificate_to_json(cert: &Certificate<Rational>) -> String {
    let file = CertificateFile {
        gamma: cert.gamma.to_string(),
        k: cert.order,
        kind: cert.kind.as_str().to_string(),
        ideal: cert
            .ideal_part
            .iter()
            .map(|(i, phi)| IdealEntry {
                i: i + 1,
                phi: phi.to_string(),
            })
            .collect(),
        cone: cert
            .cone_part
            .iter()
            .map(|(subset, sos)| ConeEntry {
                subset: subset.iter().map(|j| j + 1).collect(),
                sos: sos
                    .squares()
                    .iter()
                    .map(|(w, b)| SquareEntry {
                        w: w.to_string(),
                        p: b.to_string(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("certificate serializes")
}

fn one_based(index: usize) -> Result<usize, CertifyError> {
    index
        .checked_sub(1)
        .ok_or_else(|| CertifyError::Format("indices are one-based; found 0".into()))
}

/// Parses a certificate whose polynomials are in `n` variables.
pub fn certificate_from_json(text: &str, n: usize) -> Result<Certificate<Rational>, CertifyError> {
    let file: CertificateFile = serde_json::from_str(text)?;
    let kind = ConeKind::parse(&file.kind)
        .ok_or_else(|| CertifyError::Format(format!("unknown cone kind {:?}", file.kind)))?;
    let mut ideal_part = Vec::with_capacity(file.ideal.len());
    for e in file.ideal {
        ideal_part.push((one_based(e.i)?, parse_polynomial(&e.phi, n)?));
    }
    let mut cone_part = Vec::with_capacity(file.cone.len());
    for e in file.cone {
        let subset = e.subset.into_iter().map(one_based).collect::<Result<Vec<_>, _>>()?;
        let mut sos = SosExpression::new(n);
        for s in e.sos {
            sos.push(parse_rational(&s.w)?, parse_polynomial(&s.p, n)?);
        }
        cone_part.push((subset, sos));
    }
    Ok(Certificate {
        gamma: parse_rational(&file.gamma)?,
        ideal_part,
        cone_part,
        order: file.k,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let n = 2;
        let mut sos = SosExpression::new(n);
        sos.push(Rational::new(1.into(), 2.into()), parse_polynomial("x1 - x2", n).unwrap());
        let cert = Certificate {
            gamma: Rational::new((-3).into(), 4.into()),
            ideal_part: vec![(0, parse_polynomial("x1*x2 - 1/3", n).unwrap())],
            cone_part: vec![(vec![], SosExpression::new(n)), (vec![0, 2], sos)],
            order: 3,
            kind: ConeKind::Preordering,
        };
        let text = certificate_to_json(&cert);
        assert!(text.contains("\"J\": [\n        1,\n        3"));
        assert_eq!(certificate_from_json(&text, n).unwrap(), cert);
    }

    #[test]
    fn rejects_zero_index_and_bad_kind() {
        let z = r#"{"gamma":"0","k":1,"kind":"qmodule","ideal":[{"i":0,"phi":"1"}],"cone":[]}"#;
        assert!(matches!(certificate_from_json(z, 1), Err(CertifyError::Format(_))));
        let k = r#"{"gamma":"0","k":1,"kind":"cone","cone":[]}"#;
        assert!(matches!(certificate_from_json(k, 1), Err(CertifyError::Format(_))));
        assert!(matches!(certificate_from_json("{", 1), Err(CertifyError::Json(_))));
        let ok = r#"{"gamma":"1/2","k":0,"kind":"qmodule"}"#;
        let c = certificate_from_json(ok, 1).unwrap();
        assert!(c.ideal_part.is_empty() && c.cone_part.is_empty());
    }
}
