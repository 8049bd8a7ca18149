use dcpoly::certify::{ConvexityCone, GramCertificate};
use dcpoly::conic::MatrixCone;
use dcpoly::dcd::DecompositionRequest;
use dcpoly::poly::{parse_rational, AnyPolynomial, FloatPoly};

/// Accepted documents re-encode canonically: decode(encode(p)) == p and a
/// second encode is byte-identical.
pub fn poly_json(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(p) = AnyPolynomial::from_json(s) else { return };
    let once = p.to_json();
    let back = AnyPolynomial::from_json(&once).expect("canonical output parses");
    assert_eq!(back, p);
    assert_eq!(back.to_json(), once);
    let _ = p.into_rational();
}

pub fn rational_coef(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(q) = parse_rational(s) else { return };
    let text = q.to_string();
    assert_eq!(parse_rational(&text).expect("display output parses"), q);
}

/// Decoded certificates round-trip and can be verified without panicking.
pub fn gram_certificate(data: &[u8]) {
    let Ok(c) = serde_json::from_slice::<GramCertificate>(data) else { return };
    let text = c.to_json();
    let back: GramCertificate = serde_json::from_str(&text).expect("encoded certificate decodes");
    assert_eq!(back.basis, c.basis);
    assert_eq!(back.q.shape(), c.q.shape());
    if c.basis.poly_vars() <= 16 && c.basis.len() <= 256 {
        let _ = c.verify(&FloatPoly::zero(c.basis.poly_vars()), 1e-6);
    }
}

pub fn decomposition_request(data: &[u8]) {
    let Ok(r) = serde_json::from_slice::<DecompositionRequest>(data) else { return };
    let text = serde_json::to_string(&r).expect("request encodes");
    let back: DecompositionRequest = serde_json::from_str(&text).expect("encoded request decodes");
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

pub fn cone_name(data: &[u8]) {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(c) = s.parse::<ConvexityCone>() {
        assert_eq!(c.to_string().parse::<ConvexityCone>(), Ok(c));
        assert_eq!(ConvexityCone::from_matrix_cone(c.matrix_cone()), c);
    }
    if let Ok(m) = s.parse::<MatrixCone>() {
        assert_eq!(m.to_string().parse::<MatrixCone>(), Ok(m));
    }
}
