use super::ReportDocument;

/// Pretty JSON with fields in declaration order and full float precision.
pub fn render_json(doc: &ReportDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn parse_json(bytes: &[u8]) -> Result<ReportDocument, serde_json::Error> {
    serde_json::from_slice(bytes)
}
